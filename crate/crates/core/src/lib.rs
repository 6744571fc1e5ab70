//! Workbench for small-scale quantum simulation of quantum chemistry.
//!
//! Modules build CI matrices with Slater's rules, map fermionic Hamiltonians to
//! qubits, compile unitaries into CNOT and rotation circuits, and read out
//! eigenenergies with iterative phase estimation.

pub mod ci;
pub mod jw;
pub mod kak;
pub mod numkit;
pub mod simulator;
pub mod vintage;
