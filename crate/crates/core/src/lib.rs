//! Neural-ODE embedding workbench.
//!
//! Builds neural-ODE architectures whose time-T maps reproduce given maps
//! exactly, checks candidate embeddings by numerical integration, and
//! reports obstructions that rule out an embedding.

pub mod architectures;
pub mod cli;
pub mod constructions;
pub mod funcspec;
pub mod io;
pub mod julia;
pub mod morse;
pub mod numeric;
pub mod odecore;
pub mod suspension;
