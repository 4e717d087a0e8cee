#![allow(dead_code)]

pub mod fixed;
pub mod oracle;
