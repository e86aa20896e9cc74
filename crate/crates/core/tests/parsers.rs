use ndarray::Array2;
use proptest::prelude::*;

use semiclass::cgo::GaussianBeamState;
use semiclass::io::{
    parse_beam_path_csv, parse_grid_csv, parse_moment_csv, parse_ray_csv, write_beam_path_csv, write_grid_csv,
    write_moment_csv, LabeledGrid,
};
use semiclass::moments::cgo_moment_table;
use semiclass::wigner::Axis;

fn valid_documents() -> Vec<String> {
    let grid = LabeledGrid::new(
        ["x", "k"],
        [Axis::new(-1.0, 0.5, 3), Axis::new(0.0, 2.0, 2)],
        Array2::from_shape_fn((3, 2), |(i, j)| i as f64 - 0.25 * j as f64),
    );
    let states = [GaussianBeamState::launch(0.1, 0.02, 0.0, 1.0)];
    vec![
        write_grid_csv(&grid),
        write_beam_path_csv(&states),
        write_moment_csv(&cgo_moment_table(&[1.5, -0.5], 4)),
        "param,x0,x1,k0,k1,weight,residual\n0,1,2,3,4,1,0\n".to_string(),
    ]
}

fn parse_all(text: &str) {
    let _ = parse_grid_csv(text);
    let _ = parse_beam_path_csv(text);
    let _ = parse_moment_csv(text);
    let _ = parse_ray_csv(text);
}

/// A valid document with one byte range replaced.
fn mutated() -> impl Strategy<Value = String> {
    (
        0usize..4,
        any::<prop::sample::Index>(),
        0usize..8,
        "[-0-9eE.,#:\n a-z]{0,6}",
    )
        .prop_map(|(doc, at, len, insert)| {
            let text = valid_documents()[doc].clone();
            let bytes = text.as_bytes();
            let start = at.index(bytes.len() + 1);
            let end = (start + len).min(bytes.len());
            let mut out = bytes[..start].to_vec();
            out.extend_from_slice(insert.as_bytes());
            out.extend_from_slice(&bytes[end..]);
            String::from_utf8_lossy(&out).into_owned()
        })
}

proptest! {
    #[test]
    fn arbitrary_text_never_panics(text in "\\PC{0,200}") {
        parse_all(&text);
    }

    #[test]
    fn mutated_documents_never_panic(text in mutated()) {
        parse_all(&text);
    }
}

#[test]
fn valid_documents_parse() {
    let docs = valid_documents();
    parse_grid_csv(&docs[0]).unwrap();
    parse_beam_path_csv(&docs[1]).unwrap();
    parse_moment_csv(&docs[2]).unwrap();
    parse_ray_csv(&docs[3]).unwrap();
}
