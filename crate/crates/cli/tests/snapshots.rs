use nsk_cli::snapshot::{parse_csv_header, IoError, RawSidecar};
use nsk_cli::{read_snapshot, write_snapshot, SnapshotFormat};
use nsk_core::mesh::{GridField, Mesh, State};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_state(m: usize, n: usize, seed: u64) -> State<f64> {
    let mesh = Mesh::new(m, n).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut field = |lo: f64, hi: f64| GridField::from_fn(mesh, |_, _| rng.gen_range(lo..hi));
    let rho = field(0.5, 2.0);
    let mx = field(-1.0, 1.0);
    let my = field(-1.0, 1.0);
    State::new(rho, mx, my).unwrap()
}

fn bits(f: &GridField<f64>) -> Vec<u64> {
    f.values().iter().map(|v| v.to_bits()).collect()
}

#[test]
fn raw_round_trip_is_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    let s = random_state(8, 8, 1);
    let t = 0.1 + 1e-17;
    let path = write_snapshot(&s, t, dir.path(), 3, SnapshotFormat::Raw).unwrap();
    assert_eq!(path.file_name().unwrap(), "snap_00003.raw");
    let back = read_snapshot(&path).unwrap();
    assert_eq!(back.t.to_bits(), t.to_bits());
    assert_eq!(bits(&back.state.rho), bits(&s.rho));
    assert_eq!(bits(&back.state.mx), bits(&s.mx));
    assert_eq!(bits(&back.state.my), bits(&s.my));

    let text = std::fs::read_to_string(dir.path().join("snap_00003.json")).unwrap();
    let side: RawSidecar = serde_json::from_str(&text).unwrap();
    assert_eq!((side.m, side.n), (8, 8));
    assert_eq!(side.fields, ["rho", "mx", "my"]);
    assert_eq!(side.byte_order, "LE");
    assert_eq!(side.dtype, "f64");
    let value: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert!(value.get("M").is_some() && value.get("N").is_some());
    assert_eq!(std::fs::metadata(&path).unwrap().len(), 3 * 8 * 64);
}

#[test]
fn raw_layout_is_little_endian_row_major() {
    let dir = tempfile::tempdir().unwrap();
    let s = random_state(4, 3, 2);
    let path = write_snapshot(&s, 0.0, dir.path(), 0, SnapshotFormat::Raw).unwrap();
    let bytes = std::fs::read(path).unwrap();
    let at = |k: usize| f64::from_le_bytes(bytes[8 * k..8 * k + 8].try_into().unwrap());
    // cell (i, j) = (1, 2) of mx: offset len + i + M j
    assert_eq!(at(12 + 1 + 4 * 2), s.mx.at(1, 2));
    assert_eq!(at(2 * 12 + 3), s.my.at(3, 0));
}

#[test]
fn csv_round_trip_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let s = random_state(8, 16, 3);
    let t = 1.0 / 3.0;
    let path = write_snapshot(&s, t, dir.path(), 12, SnapshotFormat::Csv).unwrap();
    assert_eq!(path.file_name().unwrap(), "snap_00012.csv");
    let back = read_snapshot(&path).unwrap();
    assert_eq!(back.t, t);
    assert_eq!(back.state, s);

    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert_eq!(parse_csv_header(header), Some((t, 8, 16)));
    assert_eq!(lines.next(), Some("i,j,rho,mx,my"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(&row[..2], ["0", "0"]);
    let mantissa = row[2].split('e').next().unwrap().replace(['.', '-'], "");
    assert_eq!(mantissa.len(), 17);
}

#[test]
fn csv_header_parse_back() {
    assert_eq!(parse_csv_header("# t=2.5e-1 M=16 N=8"), Some((0.25, 16, 8)));
    assert_eq!(parse_csv_header("# t=0 M=4"), None);
    assert_eq!(parse_csv_header("t=0 M=4 N=4"), None);
}

#[test]
fn unwritable_directory_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("not_a_dir");
    std::fs::write(&blocker, "x").unwrap();
    let target = blocker.join("sub");
    let err =
        write_snapshot(&random_state(4, 4, 4), 0.0, &target, 0, SnapshotFormat::Csv).unwrap_err();
    assert!(matches!(err, IoError::Io { .. }));
    assert!(err.to_string().contains("not_a_dir"), "{err}");
}

#[test]
fn malformed_files_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("snap_00000.csv");
    std::fs::write(&p, "# t=0 M=4 N=4\ni,j,rho,mx,my\n0,0,1,0,0\n").unwrap();
    assert!(matches!(read_snapshot(&p), Err(IoError::Malformed { .. })));
    assert!(read_snapshot(&dir.path().join("snap.txt")).is_err());
    let missing = read_snapshot(&dir.path().join("absent.raw")).unwrap_err();
    assert!(missing.to_string().contains("absent.json"), "{missing}");
}
