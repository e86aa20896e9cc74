use proptest::prelude::*;

use semiclass_cli::config::ScenarioConfig;

const SHIPPED: [&str; 4] = [
    include_str!("../../../configs/focusing.conf"),
    include_str!("../../../configs/widths.conf"),
    include_str!("../../../configs/rays.conf"),
    include_str!("../../../configs/moments.conf"),
];

#[test]
fn shipped_configs_parse() {
    for text in SHIPPED {
        ScenarioConfig::parse(text).unwrap();
    }
}

proptest! {
    #[test]
    fn arbitrary_text_never_panics(text in "\\PC{0,300}") {
        let _ = ScenarioConfig::parse(&text);
    }

    #[test]
    fn edited_values_never_panic(
        doc in 0usize..4,
        line in any::<prop::sample::Index>(),
        value in "[-0-9eE.,a-z_ ]{0,12}",
    ) {
        let lines: Vec<&str> = SHIPPED[doc].lines().collect();
        let at = line.index(lines.len());
        let edited: Vec<String> = lines
            .iter()
            .enumerate()
            .map(|(i, l)| match (i == at, l.split_once('=')) {
                (true, Some((key, _))) => format!("{key}= {value}"),
                _ => l.to_string(),
            })
            .collect();
        let _ = ScenarioConfig::parse(&edited.join("\n"));
    }
}
