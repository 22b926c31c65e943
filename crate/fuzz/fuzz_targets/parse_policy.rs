#![no_main]

use libfuzzer_sys::fuzz_target;
use pppbandit::scheduler::parse_policy;

fuzz_target!(|data: &[u8]| {
    if let Ok(doc) = parse_policy(data) {
        let policy = doc.policy();
        let _ = policy.verify_budget();
        for entry in &policy.entries {
            let _ = entry.first_pull();
        }
    }
});
