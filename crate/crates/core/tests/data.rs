use std::io::Write;

use antimean::data::{
    group_configs, load_landmarks, projective_coordinates, synth_sample, true_antimean, write_landmarks, FrameSpec, LandmarkConfig,
    LandmarkFormat, SynthSpec,
};
use antimean::estimation::axial_moments;
use antimean::manifold::ProjectiveShape;
use antimean::numerics::linalg::dot;
use antimean::Error;

fn configs() -> Vec<LandmarkConfig> {
    (0..4)
        .map(|c| LandmarkConfig {
            config_id: format!("face{c}"),
            group: Some(if c < 2 { "a".into() } else { "b".into() }),
            landmarks: (0..7).map(|l| [l as f64 * 0.1 + c as f64, (l * l) as f64 * 0.37 - 1.0, ((l + c) % 3) as f64 + 0.25, 1.0]).collect(),
        })
        .collect()
}

#[test]
fn csv_and_json_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    for (name, fmt) in [("l.csv", LandmarkFormat::Csv), ("l.json", LandmarkFormat::Json)] {
        let path = dir.path().join(name);
        write_landmarks(&path, &configs(), fmt).unwrap();
        let back = load_landmarks(&path, LandmarkFormat::from_path(&path), Some("group")).unwrap();
        assert_eq!(back, configs(), "{name}");
    }
}

#[test]
fn three_coordinate_rows_are_homogenized() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("x.csv");
    let mut f = std::fs::File::create(&path).unwrap();
    writeln!(f, "config_id,landmark_id,x,y,z").unwrap();
    for l in 0..7 {
        writeln!(f, "c1,{l},{},{},{}", l, l * l, l % 2).unwrap();
    }
    drop(f);
    let got = load_landmarks(&path, LandmarkFormat::Csv, None).unwrap();
    assert_eq!(got.len(), 1);
    assert_eq!(got[0].k(), 7);
    assert!(got[0].landmarks.iter().all(|l| l[3] == 1.0));
}

#[test]
fn empty_file_yields_no_configs() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("e.csv");
    std::fs::write(&path, "config_id,landmark_id,x,y,z\n").unwrap();
    assert!(load_landmarks(&path, LandmarkFormat::Csv, None).unwrap().is_empty());
}

#[test]
fn malformed_rows_report_their_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(&path, "config_id,landmark_id,x,y,z\nc,0,1,2,3\nc,1,1,oops,3\n").unwrap();
    match load_landmarks(&path, LandmarkFormat::Csv, None) {
        Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
        other => panic!("{other:?}"),
    }
}

#[test]
fn too_few_landmarks_is_a_schema_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("short.csv");
    let rows: String = (0..5).map(|l| format!("c,{l},{l},1,2\n")).collect();
    std::fs::write(&path, format!("config_id,landmark_id,x,y,z\n{rows}")).unwrap();
    assert!(matches!(load_landmarks(&path, LandmarkFormat::Csv, None), Err(Error::Schema(_))));
}

#[test]
fn groups_keep_first_occurrence_order() {
    let groups = group_configs(&configs());
    let names: Vec<&str> = groups.iter().map(|(g, _)| g.as_str()).collect();
    assert_eq!(names, ["a", "b"]);
    assert_eq!(groups[1].1.len(), 2);
}

#[test]
fn frame_landmarks_map_to_the_standard_frame() {
    let frame = FrameSpec::parse_one_based("1,2,3,4,5").unwrap();
    let shape = projective_coordinates(&configs()[0], &frame).unwrap();
    assert_eq!(shape.q(), 2);
    assert!(FrameSpec::parse_one_based("1,2,3,4,4").is_err());
    assert!(FrameSpec::parse_one_based("0,1,2,3,4").is_err());
}

// The smallest-eigenvalue eigenvector of a large synthetic sample's second
// moment matrix sits within 5° of the declared antimean.
#[test]
fn synthetic_law_has_the_declared_antimean() {
    let c = ProjectiveShape::from_vectors(&[vec![0.3, 0.9, -0.2, 0.1], vec![1.0, 0.0, 0.5, 0.2]]).unwrap();
    let spec = SynthSpec::new(c, 20.0, 500, 99);
    let sample = synth_sample(&spec).unwrap();
    let truth = true_antimean(&spec).unwrap();
    let axial = axial_moments(&sample).unwrap();
    for (s, t) in truth.components().iter().enumerate() {
        let cos = dot(&axial.block(s).vector(0), t.coords()).abs().min(1.0);
        assert!(cos.acos().to_degrees() < 5.0, "block {s}: {}°", cos.acos().to_degrees());
    }
}

#[test]
fn synthetic_draws_are_reproducible() {
    let c = ProjectiveShape::from_vectors(&[vec![0.3, 0.9, -0.2, 0.1]]).unwrap();
    let spec = SynthSpec::new(c, 20.0, 30, 5);
    assert_eq!(synth_sample(&spec).unwrap(), synth_sample(&spec).unwrap());
    let longer = synth_sample(&SynthSpec { n: 40, ..spec.clone() }).unwrap();
    assert_eq!(&longer[..30], &synth_sample(&spec).unwrap()[..]);
}
