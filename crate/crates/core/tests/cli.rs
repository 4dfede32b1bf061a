mod common;

use std::fs;
use std::path::{Path, PathBuf};

use common::*;
use softedge::cli::run;
use softedge::curation::Rng;
use softedge::mapio::{write_pfm, write_pgm, write_ppm, Endianness};
use softedge::{DepthConvention, ScalarMap};
use tempfile::TempDir;

const W: usize = 24;
const H: usize = 20;

struct Scene {
    dir: TempDir,
}

impl Scene {
    fn new(seed: u64) -> Scene {
        let dir = TempDir::new().unwrap();
        let mut rng = Rng::new(seed);
        let alpha = disc_matte(&mut rng, W, H);
        let fg = rand_map(&mut rng, W, H, 2.0, 3.0, DepthConvention::InverseDepth);
        let bg = rand_map(&mut rng, W, H, 0.2, 0.5, DepthConvention::InverseDepth);
        let left = rand_image(&mut rng, W, H);
        let gate = ScalarMap::from_fn(W, H, DepthConvention::Unitless, |x, _| if x < W / 2 { 1.0 } else { 0.3 }).unwrap();
        let s = Scene { dir };
        s.put("alpha.pgm", write_pgm(&alpha));
        s.put("fg.pfm", write_pfm(&fg, Endianness::Little).unwrap());
        s.put("bg.pfm", write_pfm(&bg, Endianness::Big).unwrap());
        s.put("left.ppm", write_ppm(&left));
        s.put("gate.pfm", write_pfm(&gate, Endianness::Little).unwrap());
        let ones = ScalarMap::from_fn(W, H, DepthConvention::Unitless, |_, _| 1.0).unwrap();
        s.put("ones.pfm", write_pfm(&ones, Endianness::Big).unwrap());
        s
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn put(&self, name: &str, bytes: Vec<u8>) {
        fs::write(self.path(name), bytes).unwrap();
    }

    fn read(&self, name: &str) -> Vec<u8> {
        fs::read(self.path(name)).unwrap()
    }

    fn run(&self, args: &[&str]) -> i32 {
        let mut argv = vec!["softedge".to_owned()];
        for a in args {
            argv.push(if let Some(name) = a.strip_prefix('@') { self.path(name).display().to_string() } else { (*a).to_owned() });
        }
        run(argv)
    }
}

fn listing(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).unwrap() {
        let p = entry.unwrap().path();
        let name = PathBuf::from(p.file_name().unwrap());
        if p.is_dir() {
            out.extend(listing(&p).into_iter().map(|(q, b)| (name.join(q), b)));
        } else {
            out.push((name, fs::read(&p).unwrap()));
        }
    }
    out.sort();
    out
}

fn max_byte_gap(a: &[u8], b: &[u8]) -> u8 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x.abs_diff(*y)).max().unwrap()
}

const CURATE: &[&str] = &["curate-depth", "--alpha", "@alpha.pgm", "--fg-depth", "@fg.pfm", "--bg-depth", "@bg.pfm", "--d-max", "3", "--seed", "7"];

#[test]
fn curate_depth_is_reproducible() {
    let s = Scene::new(1);
    assert_eq!(s.run(&[CURATE, &["--out", "@a"]].concat()), 0);
    assert_eq!(s.run(&[CURATE, &["--out", "@b"]].concat()), 0);
    let a = listing(&s.path("a"));
    let names: Vec<_> = a.iter().map(|(p, _)| p.display().to_string()).collect();
    assert_eq!(names.len(), 4, "{names:?}");
    assert!(names.contains(&"manifest.jsonl".to_owned()));
    assert_eq!(a, listing(&s.path("b")));
}

#[test]
fn thread_count_does_not_change_bytes() {
    let s = Scene::new(2);
    let batch: &[&str] = &["--count", "5"];
    assert_eq!(s.run(&[&["--threads", "1"], CURATE, batch, &["--out", "@one"]].concat()), 0);
    assert_eq!(s.run(&[&["--threads", "8"], CURATE, batch, &["--out", "@eight"]].concat()), 0);
    let one = listing(&s.path("one"));
    assert_eq!(one.len(), 16);
    assert_eq!(one, listing(&s.path("eight")));
}

#[test]
fn zero_threads_is_a_usage_error() {
    let s = Scene::new(3);
    assert_eq!(s.run(&[&["--threads", "0"], CURATE, &["--out", "@x"]].concat()), 1);
}

#[test]
fn open_gate_keeps_input_bytes() {
    let s = Scene::new(4);
    let code = s.run(&["refine", "--d-in", "@bg.pfm", "--gate", "@ones.pfm", "--residual", "@fg.pfm", "--out", "@hat.pfm", "--region", "@region.pgm"]);
    assert_eq!(code, 0);
    assert_eq!(s.read("hat.pfm"), s.read("bg.pfm"));
    assert!(s.path("hat.manifest.jsonl").exists());
    let region = s.read("region.pgm");
    assert!(region[region.len() - W * H..].iter().all(|b| *b == 0));
}

#[test]
fn refine_needs_complete_inputs() {
    let s = Scene::new(5);
    assert_eq!(s.run(&["refine", "--d-in", "@bg.pfm", "--gate", "@gate.pfm", "--out", "@hat.pfm"]), 1);
    assert!(!s.path("hat.pfm").exists());
}

#[test]
fn identical_views_score_perfectly() {
    let s = Scene::new(6);
    assert_eq!(s.run(&["eval-stereo", "--gen", "@left.ppm", "--gt", "@left.ppm", "--report", "@r.json"]), 0);
    let r: serde_json::Value = serde_json::from_slice(&s.read("r.json")).unwrap();
    assert_eq!(r["psnr"], 99.0);
    assert_eq!(r["ssim"], 1.0);
    assert_eq!(r["rmse"], 0.0);
    assert_eq!(r["siou_standin"], 1.0);
    assert_eq!(r["inputs"].as_object().unwrap().len(), 1);
}

#[test]
fn loss_prints_value_and_rejects_unknown_kinds() {
    let s = Scene::new(7);
    assert_eq!(s.run(&["loss", "--kind", "l1", "--pred", "@fg.pfm", "--gt", "@fg.pfm", "--gradient-out", "@g.pfm"]), 0);
    assert!(s.path("g.manifest.jsonl").exists());
    assert_eq!(s.run(&["loss", "--kind", "l7", "--pred", "@fg.pfm", "--gt", "@bg.pfm"]), 1);
    assert_eq!(s.run(&["loss", "--kind", "color_fuse", "--pred", "@left.ppm", "--gt", "@left.ppm"]), 1);
}

const PIPE: &[&str] = &["pipeline-stereo", "--left", "@left.ppm", "--depth", "@fg.pfm", "--scale", "2"];

#[test]
fn pipeline_rejects_half_refinement() {
    let s = Scene::new(8);
    assert_eq!(s.run(&[PIPE, &["--residual", "@bg.pfm", "--out", "@right.ppm"]].concat()), 1);
    assert!(!s.path("right.ppm").exists());
    assert_eq!(s.run(&[PIPE, &["--convention", "metric", "--out", "@right.ppm"]].concat()), 1);
}

#[test]
fn malformed_input_leaves_nothing_behind() {
    let s = Scene::new(9);
    let mut bad = s.read("fg.pfm");
    bad.truncate(bad.len() - 3);
    s.put("bad.pfm", bad);
    let before = listing(s.dir.path());
    assert_eq!(s.run(&[PIPE, &["--residual", "@bad.pfm", "--gate", "@gate.pfm", "--out", "@right.ppm", "--dump-dir", "@dump"]].concat()), 2);
    assert_eq!(s.run(&["refine", "--d-in", "@bad.pfm", "--gate", "@gate.pfm", "--residual", "@fg.pfm", "--out", "@hat.pfm"]), 2);
    assert_eq!(s.run(&["warp-flow", "--image", "@left.ppm", "--flow", "@missing.flo", "--out", "@w.ppm"]), 2);
    assert_eq!(listing(s.dir.path()), before);
}

#[test]
fn stage_override_leaves_other_stages_alone() {
    let s = Scene::new(10);
    let refine: &[&str] = &["--gate", "@gate.pfm", "--residual", "@bg.pfm"];
    assert_eq!(s.run(&[PIPE, refine, &["--out", "@plain.ppm", "--dump-dir", "@plain"]].concat()), 0);
    s.put("paint.ppm", write_ppm(&rand_image(&mut Rng::new(99), W, H)));
    assert_eq!(s.run(&[PIPE, refine, &["--inpainted", "@paint.ppm", "--out", "@over.ppm", "--dump-dir", "@over"]].concat()), 0);
    for name in ["depth.pfm", "disparity.pfm", "warped.ppm", "coverage.pgm"] {
        assert_eq!(s.read(&format!("plain/{name}")), s.read(&format!("over/{name}")), "{name}");
    }
    assert_eq!(s.read("over/inpainted.ppm"), s.read("paint.ppm"));
    assert!(s.path("plain.manifest.jsonl").exists());
    assert!(s.path("over.manifest.jsonl").exists());
}

#[test]
fn stereo_stages_chain_like_the_pipeline() {
    let s = Scene::new(11);
    assert_eq!(s.run(&[PIPE, &["--out", "@right.ppm", "--dump-dir", "@dump", "--feather-sigma", "0"]].concat()), 0);
    let warp = ["warp-stereo", "--image", "@left.ppm", "--depth", "@fg.pfm", "--scale", "2", "--out", "@w.ppm", "--coverage", "@c.pgm"];
    assert_eq!(s.run(&warp), 0);
    assert_eq!(s.read("w.ppm"), s.read("dump/warped.ppm"));
    assert_eq!(s.read("c.pgm"), s.read("dump/coverage.pgm"));
    assert_eq!(s.run(&["inpaint", "--image", "@w.ppm", "--coverage", "@c.pgm", "--out", "@p.ppm"]), 0);
    assert!(max_byte_gap(&s.read("p.ppm"), &s.read("dump/inpainted.ppm")) <= 1);
    assert_eq!(s.run(&["fuse", "--warped", "@w.ppm", "--inpainted", "@p.ppm", "--coverage", "@c.pgm", "--feather-sigma", "0", "--out", "@f.ppm"]), 0);
    assert!(max_byte_gap(&s.read("f.ppm"), &s.read("right.ppm")) <= 1);
    for m in ["w", "p", "f", "right"] {
        assert!(s.path(&format!("{m}.manifest.jsonl")).exists(), "{m}");
    }
}

#[test]
fn binary_reports_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_softedge");
    let status = |args: &[&str]| std::process::Command::new(bin).args(args).output().unwrap().status.code();
    assert_eq!(status(&["--help"]), Some(0));
    assert_eq!(status(&["no-such-command"]), Some(1));
    assert_eq!(status(&["eval-stereo", "--gen", "/nonexistent/a.ppm", "--gt", "/nonexistent/b.ppm", "--report", "/nonexistent/r.json"]), Some(2));
}
