#![allow(dead_code)]

pub mod fd_checks;
