pub use shiftbench_core;
