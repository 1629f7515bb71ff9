#![no_main]

use libfuzzer_sys::fuzz_target;

use invgen::numeric::{ExtRat, Rat};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(q) = text.parse::<Rat>() {
        assert_eq!(q.to_string().parse::<Rat>().expect("round trip"), q);
    }
    if let Ok(e) = text.parse::<ExtRat>() {
        assert_eq!(e.to_string().parse::<ExtRat>().expect("round trip"), e);
    }
});
