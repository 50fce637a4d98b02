#![no_main]
use libfuzzer_sys::fuzz_target;
use utcat::algebra_object::parse_state;
use utcat::linalg::Vector;

fn parse(s: &str) -> utcat::Result<Vector> {
    parse_state(&utcat::io::parse_value(s)?, 4)
}

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        let _ = parse(s);
    }
});
