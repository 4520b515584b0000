pub mod bifurcation;
pub mod diophantine;
pub mod freqmap;
pub mod glue;
pub mod monodromy;
pub mod solve_tori;
pub mod verify_freq;
