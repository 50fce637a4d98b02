#![no_main]
use libfuzzer_sys::fuzz_target;
use utcat::skeletal_cat::SkeletalUTC;

fn parse(s: &str) -> utcat::Result<SkeletalUTC> {
    SkeletalUTC::from_json(&utcat::io::parse_value(s)?)
}

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        let _ = parse(s);
    }
});
