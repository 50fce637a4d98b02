#![no_main]
use libfuzzer_sys::fuzz_target;
use utcat::fusion_ring::{validate_ring, RawRing};

fn parse(s: &str) -> utcat::Result<()> {
    let v = utcat::io::parse_value(s)?;
    let ring = validate_ring(&RawRing::from_json(&v)?)?;
    let _ = ring.violations();
    Ok(())
}

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        let _ = parse(s);
    }
});
