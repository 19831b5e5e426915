pub mod pseudocode;
