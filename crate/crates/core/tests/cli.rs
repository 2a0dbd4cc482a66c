use std::path::Path;

use dtstore::bench::{gen_sparse, parse_report, GenSpec};
use dtstore::cli::dispatch;
use dtstore::container::{read_coo_file, read_dense_file, write_coo_file, write_dense_file};
use dtstore::{dense_to_coo, slice_dense, DenseTensor, Shape, SliceSpec, TensorData};

fn dt(args: &[&str]) -> dtstore::cli::Outcome {
    dispatch(std::iter::once("dt").chain(args.iter().copied()))
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn image() -> DenseTensor {
    let shape = Shape::new(vec![6, 3, 8, 8]).unwrap();
    let data = (0..shape.element_count()).map(|i| (i % 200) as u8 + 1).collect();
    DenseTensor::new(shape, TensorData::U8(data)).unwrap()
}

#[test]
fn dense_write_read_slice() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("img.dten");
    let table = dir.path().join("lake");
    let t = image();
    write_dense_file(&input, &t).unwrap();

    let o = dt(&["write", "--input", s(&input), "--table", s(&table), "--layout", "auto"]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let id = o.stdout.trim().to_string();
    assert!(id.starts_with("ftsf-4d-"), "{id}");
    assert_eq!(id.len(), "ftsf-4d-".len() + 12);

    let out = dir.path().join("back.dten");
    let o = dt(&["read", "--table", s(&table), "--id", &id, "--out", s(&out)]);
    assert_eq!((o.code, o.stdout.trim()), (0, s(&out)));
    assert!(read_dense_file(&out).unwrap().bitwise_eq(&t));

    let out = dir.path().join("slice.dten");
    let o = dt(&["slice", "--table", s(&table), "--id", &id, "--spec", "2:4,:,:,:", "--out", s(&out)]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let want = slice_dense(&t, &SliceSpec::leading(4, 2, 4)).unwrap();
    assert!(read_dense_file(&out).unwrap().bitwise_eq(&want));

    // a slice through chunk dims still works, by full decode
    let o = dt(&["slice", "--table", s(&table), "--id", &id, "--spec", "1,0,:,3", "--out", s(&out)]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    assert_eq!(read_dense_file(&out).unwrap().shape().dims(), &[1, 1, 8, 1]);

    let o = dt(&["inspect", "--table", s(&table)]);
    assert_eq!(o.code, 0);
    assert!(o.stdout.contains("ftsf.v1"));
    assert!(o.stdout.contains(&format!("tensor\t{id}\tFTSF\t6x3x8x8\tU8\trows=6")), "{}", o.stdout);
}

#[test]
fn sparse_layouts_and_auto() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("lake");
    let c = gen_sparse(&GenSpec::new(Shape::new(vec![40, 24, 11, 17]).unwrap(), 0.000385, 7)).unwrap();
    let input = dir.path().join("rides.dcoo");
    write_coo_file(&input, &c).unwrap();

    let o = dt(&["write", "--input", s(&input), "--table", s(&table), "--layout", "auto", "--id", "rides"]);
    assert_eq!((o.code, o.stdout.as_str()), (0, "rides\n"), "{}", o.stderr);
    let o = dt(&["inspect", "--table", s(&table)]);
    assert!(o.stdout.contains("tensor\trides\tBSGS"), "{}", o.stdout);

    for layout in ["coo", "csr", "csc", "csf", "bsgs"] {
        let id = format!("r-{layout}");
        let mut args = vec!["write", "--input", s(&input), "--table", s(&table), "--layout", layout, "--id", &id];
        if layout == "bsgs" {
            args.extend(["--block-shape", "4,4"]);
        }
        let o = dt(&args);
        assert_eq!(o.code, 0, "{layout}: {}", o.stderr);
        let out = dir.path().join(format!("{layout}.dcoo"));
        let o = dt(&["read", "--table", s(&table), "--id", &id, "--out", s(&out)]);
        assert_eq!(o.code, 0, "{}", o.stderr);
        assert!(read_coo_file(&out).unwrap().bitwise_eq(&c), "{layout}");
        let o = dt(&["slice", "--table", s(&table), "--id", &id, "--spec", "3,:,2:9,:", "--out", s(&out)]);
        assert_eq!(o.code, 0, "{}", o.stderr);
        let spec = dtstore::cli::parse_slice_spec("3,:,2:9,:").unwrap();
        assert!(read_coo_file(&out).unwrap().bitwise_eq(&c.slice(&spec).unwrap()), "{layout}");
    }

    // a dense file can go into a sparse layout
    let dense_in = dir.path().join("img.dten");
    write_dense_file(&dense_in, &image()).unwrap();
    let o = dt(&["write", "--input", s(&dense_in), "--table", s(&table), "--layout", "csf", "--id", "img"]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let out = dir.path().join("img.dcoo");
    dt(&["read", "--table", s(&table), "--id", "img", "--out", s(&out)]);
    assert!(read_coo_file(&out).unwrap().bitwise_eq(&dense_to_coo(&image())));
}

#[test]
fn errors_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("lake");
    let input = dir.path().join("img.dten");
    write_dense_file(&input, &image()).unwrap();
    let out = dir.path().join("o.dten");

    let o = dt(&["write", "--input", s(&input), "--table", s(&table), "--layout", "ftsf", "--id", "a"]);
    assert_eq!(o.code, 0);

    let o = dt(&["read", "--table", s(&table), "--id", "ghost", "--out", s(&out)]);
    assert_eq!(o.code, 2);
    assert!(o.stderr.contains("unknown id"), "{}", o.stderr);
    assert!(o.stdout.is_empty());

    let o = dt(&["write", "--input", s(&input), "--table", s(&table), "--layout", "ftsf", "--id", "a"]);
    assert_eq!(o.code, 2, "duplicate id: {}", o.stderr);

    let cases: &[&[&str]] = &[
        &["write", "--input", s(&input), "--table", s(&table), "--layout", "parquet"],
        &["write", "--input", s(&input), "--table", s(&table), "--layout", "ftsf", "--chunk-dim", "4"],
        &["write", "--input", s(&input), "--table", s(&table), "--layout", "bsgs", "--block-shape", "2,x"],
        &["slice", "--table", s(&table), "--id", "a", "--spec", "0:9,:,:,:", "--out", s(&out)],
        &["slice", "--table", s(&table), "--id", "a", "--spec", "0:1,:", "--out", s(&out)],
        &["read", "--table", s(&table), "--id", "a"],
        &["read", "--table", s(&table), "--id", "a", "--out", s(&out), "--verbose"],
    ];
    for args in cases {
        let o = dt(args);
        assert_eq!(o.code, 1, "{args:?}: {}", o.stderr);
        assert!(!o.stderr.is_empty());
    }

    // corrupt a segment: data error
    let seg = std::fs::read_dir(table.join("ftsf").join("segments")).unwrap().next().unwrap().unwrap().path();
    let mut bytes = std::fs::read(&seg).unwrap();
    let n = bytes.len();
    bytes[n - 3] ^= 0xff;
    std::fs::write(&seg, bytes).unwrap();
    let o = dt(&["read", "--table", s(&table), "--id", "a", "--out", s(&out)]);
    assert_eq!(o.code, 2, "{}", o.stderr);
}

#[test]
fn bench_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("r.json");
    let o = dt(&[
        "bench", "--shape", "12,10,8", "--density", "0.05", "--seed", "3", "--layouts", "coo,csf,bsgs",
        "--trials", "2", "--slice", "1,:,:", "--report", s(&report), "--format", "json",
    ]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let r = parse_report(&std::fs::read(&report).unwrap()).unwrap();
    assert_eq!(r.results.len(), 3);
    assert_eq!(r.spec.slice, "1:2,:,:");
    assert!(r.results.iter().all(|x| x.is_consistent()));

    let csv = dir.path().join("r.csv");
    let o = dt(&[
        "bench", "--shape", "12,10", "--density", "0.2", "--seed", "3", "--layouts", "ftsf",
        "--report", s(&csv), "--format", "csv",
    ]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert!(text.lines().nth(1).unwrap().ends_with(",10"), "default of ten trials");

    let o = dt(&[
        "bench", "--shape", "4,4", "--density", "2", "--seed", "1", "--layouts", "coo",
        "--report", s(&csv), "--format", "json",
    ]);
    assert_eq!(o.code, 1);
}
