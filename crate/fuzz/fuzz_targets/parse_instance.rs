#![no_main]

use libfuzzer_sys::fuzz_target;
use pppbandit::instance::{parse_instance, serialize_instance};

fuzz_target!(|data: &[u8]| {
    if let Ok(instance) = parse_instance(data) {
        // Anything accepted must survive a write and re-read unchanged.
        let bytes = serialize_instance(&instance);
        let again = parse_instance(&bytes).expect("serialized instance parses");
        assert_eq!(instance, again);
    }
});
