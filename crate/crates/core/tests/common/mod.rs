#![allow(dead_code)]

use pelcr::engine::EngineOptions;
use pelcr::runtime::RuntimeConfig;

pub const II: &str = r"(\x x)(\x x)";
pub const TWO_I: &str = r"(\f \x (f)(f)x) \x x";
pub const DELTA_I: &str = r"(\x (x)x) \x x";
pub const TWO_TWO: &str = "(2)(2)";
pub const DD2: &str = r"(\x (x)x)(\x (x)x)2";
pub const DD3: &str = r"(\x (x)x)(\x (x)x)3";
pub const DD4: &str = r"(\x (x)x)(\x (x)x)4";

/// Terms every whole-system property is checked on, with their free variables.
pub const SUITE: &[(&str, &[&str])] = &[
    (II, &[]),
    (TWO_I, &[]),
    (DELTA_I, &[]),
    (TWO_TWO, &[]),
    (r"(2)(2)(\x x)", &[]),
    (r"(3)(2)", &[]),
    (r"(\x x) y", &["y"]),
    (r"(2) f", &["f"]),
    (r"(\x \y (x)(x)y) (\z z) a", &["a"]),
    (DD2, &[]),
    (DD3, &[]),
];

/// Terms small enough for path enumeration on every intermediate net.
pub const SMALL: &[&str] = &[II, TWO_I, DELTA_I, TWO_TWO];

pub fn free(vars: &[&str]) -> Vec<String> {
    vars.iter().map(|s| s.to_string()).collect()
}

pub fn config(workers: usize, engine: EngineOptions) -> RuntimeConfig {
    RuntimeConfig {
        workers,
        engine,
        ..RuntimeConfig::default()
    }
}

pub fn opts(opt_one: bool, slot_skip: bool, gc: bool) -> EngineOptions {
    EngineOptions {
        opt_one,
        slot_skip,
        gc,
    }
}
