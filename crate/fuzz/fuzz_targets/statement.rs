#![no_main]

use libfuzzer_sys::fuzz_target;

use invgen::formula::parse_statement;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let vars = vec!["x".to_string(), "y".to_string()];
    if let Ok(f) = parse_statement(text, &vars) {
        // Printing and reparsing must give the same formula.
        let printed = f.display(&vars).to_string();
        let again = parse_statement(&printed, &vars).expect("printed statement parses");
        assert_eq!(again.display(&vars).to_string(), printed);
    }
});
