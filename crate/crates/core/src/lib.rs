pub mod cli;
pub mod conditions;
pub mod expr;
pub mod invariants;
pub mod model;
pub mod numerics;
pub mod solvers;
pub mod verify;
