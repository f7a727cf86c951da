#![allow(dead_code)]
pub mod mini;
pub mod planted;
