#![allow(dead_code)]

pub mod correspondence;
pub mod grid;
