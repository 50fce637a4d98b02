#![no_main]
use libfuzzer_sys::fuzz_target;
use utcat::semicircular::{BaseAlgebra, CovarianceMatrix};

fn parse(s: &str) -> utcat::Result<CovarianceMatrix> {
    CovarianceMatrix::from_json(BaseAlgebra::diagonal(2), &utcat::io::parse_value(s)?)
}

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        let _ = parse(s);
    }
});
