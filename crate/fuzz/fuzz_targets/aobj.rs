#![no_main]
use std::sync::{Arc, OnceLock};

use libfuzzer_sys::fuzz_target;
use utcat::algebra_object::AlgebraObject;
use utcat::skeletal_cat::SkeletalUTC;

// parsed against Fibonacci; the category itself is fuzzed by `cat`
fn cat() -> Arc<SkeletalUTC> {
    static CAT: OnceLock<Arc<SkeletalUTC>> = OnceLock::new();
    CAT.get_or_init(|| Arc::new(utcat::fixtures::fibonacci())).clone()
}

fn parse(s: &str) -> utcat::Result<AlgebraObject> {
    AlgebraObject::from_json(cat(), &utcat::io::parse_value(s)?)
}

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        let _ = parse(s);
    }
});
