#![allow(dead_code)]

pub mod enumerate;
pub mod fixtures;
pub mod oracles;
pub mod checks;
