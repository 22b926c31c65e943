#![no_main]

use libfuzzer_sys::fuzz_target;
use pppbandit::sim::parse_experiment_config;

fuzz_target!(|data: &[u8]| {
    let _ = parse_experiment_config(data);
});
