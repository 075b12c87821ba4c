#![no_main]

use libfuzzer_sys::fuzz_target;
use sho_rake::table::parse_csv;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(table) = parse_csv(text) {
        // written tables read back to the same shape
        let again = parse_csv(&table.to_csv()).expect("round trip");
        assert_eq!(again.header, table.header);
        assert_eq!(again.rows.len(), table.rows.len());
    }
    let _ = sho_rake::cli::validate_table(text);
});
