#![no_main]

use libfuzzer_sys::fuzz_target;

use invgen::program::Program;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(p) = Program::parse(text) {
        let printed = p.to_string();
        let again = Program::parse(&printed).expect("printed program parses");
        assert_eq!(again.to_string(), printed);
        let _ = p.template();
        let _ = p.cfg();
        let _ = p.lints();
    }
});
