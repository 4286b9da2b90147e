//! Run artifacts: manifests, JSON-lines trajectory datasets, CSV dumps for
//! fields and densities, verification reports, and comparison tables.
//!
//! Every writer goes through [`write_atomic`]: the bytes land in a
//! temporary sibling file which is renamed over the target, so readers
//! never observe a half-written artifact and interrupted runs leave the
//! previous version intact. Floats are formatted with the shortest
//! round-trip representation, which makes reruns of the same binary
//! byte-identical — the determinism the manifests promise. Manifest
//! timestamps are the one intentional exception and live in clearly named
//! fields so comparisons can mask them.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::burgers::DensityField;
use crate::config::BuiltinDensity;
use crate::error::{Error, Result};
use crate::field::{FieldSample, PairingSweep};
use crate::frame::FrameDump;
use crate::hist::ComparisonReport;
use crate::process::TrajectoryRecord;
use crate::sde::MomentTestResult;

/// Write bytes to `path` atomically: write `<path>.tmp`, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn now_unix() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

/// One pass/fail line in a manifest's invariant-suite summary.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckSummary {
    pub name: String,
    pub pass: bool,
}

/// Everything needed to reproduce a run: the config text it was started
/// from, the effective seed, the code version, and the artifacts written.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub code_version: String,
    /// Effective seed (config value or --seed override).
    pub seed: u64,
    pub config_path: String,
    /// Raw text of the config file.
    pub config_echo: String,
    /// Wall-clock timestamps (unix seconds). Excluded from determinism
    /// comparisons by design.
    pub started_unix: f64,
    pub finished_unix: f64,
    pub wall_seconds: f64,
    /// Artifact file names, relative to the output directory.
    pub outputs: Vec<String>,
    /// Pass/fail summary of any invariant suites the command ran.
    pub checks: Vec<CheckSummary>,
}

impl Manifest {
    /// Start a manifest clock for `command`.
    pub fn start(command: &str, seed: u64, config_path: &str, config_echo: &str) -> Manifest {
        Manifest {
            command: command.to_string(),
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            config_path: config_path.to_string(),
            config_echo: config_echo.to_string(),
            started_unix: now_unix(),
            finished_unix: 0.0,
            wall_seconds: 0.0,
            outputs: Vec::new(),
            checks: Vec::new(),
        }
    }

    /// Close the clock, verify that every listed output exists non-empty
    /// under `dir`, and write `manifest.json` there.
    pub fn finish(mut self, dir: &Path) -> Result<()> {
        self.finished_unix = now_unix();
        self.wall_seconds = self.finished_unix - self.started_unix;
        for name in &self.outputs {
            let p = dir.join(name);
            let len = std::fs::metadata(&p).map(|m| m.len()).unwrap_or(0);
            if len == 0 {
                return Err(Error::Config(format!(
                    "manifest lists output {} but it is missing or empty",
                    p.display()
                )));
            }
        }
        let json = serde_json::to_string_pretty(&self).expect("manifest serializes");
        write_atomic(&dir.join("manifest.json"), json.as_bytes())
    }
}

/// One JSON-lines record: a frame dump tagged with its trajectory index,
/// plus the M(t) snapshot when the run stored matrices.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub traj: u64,
    pub t: f64,
    /// Eigenvalues as [re, im] pairs, label-continuous along the trajectory.
    pub lambda: Vec<[f64; 2]>,
    /// Full overlap matrix, row-major [re, im] pairs.
    pub overlap: Vec<Vec<[f64; 2]>>,
    pub min_gap: f64,
    /// Row-major matrix entries, present only with `store_matrices`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<[f64; 2]>>,
}

impl RunRecord {
    fn from_dump(traj: u64, dump: FrameDump, matrix: Option<Vec<[f64; 2]>>) -> RunRecord {
        RunRecord {
            traj,
            t: dump.t,
            lambda: dump.lambda,
            overlap: dump.overlap,
            min_gap: dump.min_gap,
            matrix,
        }
    }

    /// Eigenvalue count of the recorded frame.
    pub fn n(&self) -> usize {
        self.lambda.len()
    }

    /// The (Ξ, Θ) atom lists of this frame: weights 1/n and Re𝒪_jj/n².
    pub fn measures(
        &self,
    ) -> (
        crate::frame::EmpiricalMeasure,
        crate::frame::EmpiricalMeasure,
    ) {
        let n = self.n() as f64;
        let mut xi = Vec::with_capacity(self.lambda.len());
        let mut theta = Vec::with_capacity(self.lambda.len());
        for (j, l) in self.lambda.iter().enumerate() {
            let z = num_complex::Complex64::new(l[0], l[1]);
            xi.push((z, 1.0 / n));
            theta.push((z, self.overlap[j][j][0] / (n * n)));
        }
        (
            crate::frame::EmpiricalMeasure { atoms: xi },
            crate::frame::EmpiricalMeasure { atoms: theta },
        )
    }
}

/// Serialize an ensemble to JSON-lines, one record per (trajectory, time).
pub fn dataset_lines(records: &[TrajectoryRecord]) -> String {
    let mut out = String::new();
    for rec in records {
        for (i, frame) in rec.frames.iter().enumerate() {
            let matrix = rec
                .matrices
                .as_ref()
                .map(|ms| ms[i].as_slice().iter().map(|e| [e.re, e.im]).collect());
            let line = RunRecord::from_dump(rec.traj, frame.dump(), matrix);
            out.push_str(&serde_json::to_string(&line).expect("record serializes"));
            out.push('\n');
        }
    }
    out
}

/// Parse a JSON-lines dataset (blank lines ignored).
pub fn parse_dataset(text: &str) -> Result<Vec<RunRecord>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: RunRecord = serde_json::from_str(line)
            .map_err(|e| Error::Config(format!("dataset line {}: {e}", i + 1)))?;
        out.push(rec);
    }
    Ok(out)
}

/// One line of a verification report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportLine {
    pub suite: String,
    pub observable: String,
    /// Predicted value as [re, im]; for defect checks, the tolerance.
    pub predicted: [f64; 2],
    /// Estimated value as [re, im]; for defect checks, the worst defect.
    pub estimate: [f64; 2],
    pub std_error: f64,
    /// Deviation in standard errors; for defect checks, defect/tolerance.
    pub z_score: f64,
    pub pass: bool,
}

impl ReportLine {
    /// Wrap a one-step Monte Carlo moment test.
    pub fn from_moment(suite: &str, r: &MomentTestResult) -> ReportLine {
        ReportLine {
            suite: suite.to_string(),
            observable: r.observable.to_string(),
            predicted: [r.predicted.re, r.predicted.im],
            estimate: [r.estimate.value.re, r.estimate.value.im],
            std_error: r.estimate.std_error,
            z_score: r.z_score,
            pass: r.pass,
        }
    }

    /// Wrap a deterministic defect check: pass iff defect ≤ tolerance.
    pub fn from_defect(suite: &str, observable: &str, defect: f64, tolerance: f64) -> ReportLine {
        ReportLine {
            suite: suite.to_string(),
            observable: observable.to_string(),
            predicted: [tolerance, 0.0],
            estimate: [defect, 0.0],
            std_error: 0.0,
            z_score: if tolerance > 0.0 {
                defect / tolerance
            } else {
                f64::INFINITY
            },
            pass: defect <= tolerance,
        }
    }

    /// Wrap a plain boolean check.
    pub fn from_flag(suite: &str, observable: &str, pass: bool) -> ReportLine {
        ReportLine {
            suite: suite.to_string(),
            observable: observable.to_string(),
            predicted: [0.0, 0.0],
            estimate: [0.0, 0.0],
            std_error: 0.0,
            z_score: 0.0,
            pass,
        }
    }
}

/// Pretty-printed JSON verification report.
pub fn report_json(lines: &[ReportLine]) -> String {
    serde_json::to_string_pretty(lines).expect("report serializes")
}

/// CSV dump of a field sweep. Columns: t, re_z, im_z, re_w, im_w, psi,
/// fk_det, re_dpsi_dw, im_dpsi_dw, mu_lambda, mu_overlap.
pub fn field_csv(t: f64, samples: &[FieldSample]) -> String {
    let mut out = String::from(
        "t,re_z,im_z,re_w,im_w,psi,fk_det,re_dpsi_dw,im_dpsi_dw,mu_lambda,mu_overlap\n",
    );
    for s in samples {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            t,
            s.z.re,
            s.z.im,
            s.w.re,
            s.w.im,
            s.psi,
            s.fk_det,
            s.dpsi_dw.re,
            s.dpsi_dw.im,
            s.mu_lambda,
            s.mu_overlap
        ));
    }
    out
}

/// CSV dump of the w → 0 pairing sweep against its exact atomic limits.
pub fn pairing_csv(sweep: &PairingSweep) -> String {
    let mut out = String::from(
        "w,lambda_pairing,lambda_exact,lambda_abs_err,overlap_pairing,overlap_exact,overlap_abs_err\n",
    );
    for (i, w) in sweep.w_values.iter().enumerate() {
        let lp = sweep.lambda_pairings[i];
        let op = sweep.overlap_pairings[i];
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            w,
            lp,
            sweep.exact_lambda,
            (lp - sweep.exact_lambda).abs(),
            op,
            sweep.exact_overlap,
            (op - sweep.exact_overlap).abs()
        ));
    }
    out
}

/// CSV dump of solved density fields, one block per time. Columns: t,
/// re_z, im_z, rho, overlap_density, in_support; when a builtin closed
/// form is known, also rho_closed, overlap_closed, in_support_closed.
pub fn density_csv(fields: &[DensityField], closed: Option<BuiltinDensity>) -> String {
    let mut out = String::from("t,re_z,im_z,rho,overlap_density,in_support");
    if closed.is_some() {
        out.push_str(",rho_closed,overlap_closed,in_support_closed");
    }
    out.push('\n');
    for f in fields {
        for iy in 0..f.grid.ny {
            for ix in 0..f.grid.nx {
                let idx = f.idx(ix, iy);
                let z = f.grid.node(ix, iy);
                out.push_str(&format!(
                    "{},{},{},{},{},{}",
                    f.t,
                    z.re,
                    z.im,
                    f.rho[idx],
                    f.overlap_density[idx],
                    u8::from(f.support_mask[idx]),
                ));
                if let Some(b) = closed {
                    let c = b.closed(f.t, z);
                    out.push_str(&format!(
                        ",{},{},{}",
                        c.rho,
                        c.overlap,
                        u8::from(c.in_support)
                    ));
                }
                out.push('\n');
            }
        }
    }
    out
}

/// One row of a parsed density CSV (closed-form columns ignored).
#[derive(Debug, Clone, Copy)]
pub struct DensityRow {
    pub t: f64,
    pub z: num_complex::Complex64,
    pub rho: f64,
    pub overlap_density: f64,
    pub in_support: bool,
}

/// Parse a density CSV produced by [`density_csv`].
pub fn parse_density_csv(text: &str) -> Result<Vec<DensityRow>> {
    let mut lines = text.lines().enumerate();
    let header = lines
        .next()
        .ok_or_else(|| Error::Config("density CSV is empty".into()))?
        .1;
    let cols: Vec<&str> = header.split(',').collect();
    let want = ["t", "re_z", "im_z", "rho", "overlap_density", "in_support"];
    if cols.len() < want.len() || cols[..want.len()] != want {
        return Err(Error::Config(format!(
            "density CSV header {header:?} does not start with {}",
            want.join(",")
        )));
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() < want.len() {
            return Err(Error::Config(format!(
                "density CSV line {}: too few columns",
                i + 1
            )));
        }
        let num = |j: usize| -> Result<f64> {
            fields[j].trim().parse().map_err(|_| {
                Error::Config(format!(
                    "density CSV line {}: bad number {:?}",
                    i + 1,
                    fields[j]
                ))
            })
        };
        out.push(DensityRow {
            t: num(0)?,
            z: num_complex::Complex64::new(num(1)?, num(2)?),
            rho: num(3)?,
            overlap_density: num(4)?,
            in_support: num(5)? != 0.0,
        });
    }
    Ok(out)
}

/// CSV dump of comparison reports: one row per bin with the per-report
/// sup-norm summary repeated on each row of its group.
pub fn comparison_csv(reports: &[ComparisonReport]) -> String {
    let mut out = String::from(
        "measure,r_lo,r_hi,count,estimate,prediction,std_error,z_score,sup_abs,sup_rel,max_z\n",
    );
    for r in reports {
        for b in &r.bins {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{}\n",
                r.label,
                b.r_lo,
                b.r_hi,
                b.count,
                b.estimate,
                b.prediction,
                b.std_error,
                b.z_score,
                r.sup_abs,
                r.sup_rel,
                r.max_z
            ));
        }
    }
    out
}

/// JSON form of the comparison reports.
pub fn comparison_json(reports: &[ComparisonReport]) -> String {
    serde_json::to_string_pretty(reports).expect("comparison serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn scratch_dir(tag: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!("ginflow-report-{tag}-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        dir
    }

    #[test]
    fn atomic_writes_replace_and_leave_no_temporaries() {
        let dir = scratch_dir("atomic");
        let target = dir.join("data.txt");
        write_atomic(&target, b"first").unwrap();
        write_atomic(&target, b"second").unwrap();
        assert_eq!(std::fs::read(&target).unwrap(), b"second");
        let leftovers: Vec<_> = std::fs::read_dir(&dir)
            .unwrap()
            .filter(|e| {
                e.as_ref()
                    .unwrap()
                    .file_name()
                    .to_string_lossy()
                    .ends_with(".tmp")
            })
            .collect();
        assert!(leftovers.is_empty());
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn manifests_reject_missing_or_empty_outputs() {
        let dir = scratch_dir("manifest");
        let mut m = Manifest::start("simulate", 7, "cfg.toml", "n = 2\n");
        m.outputs.push("run.jsonl".into());
        assert!(m.clone().finish(&dir).is_err());
        std::fs::write(dir.join("run.jsonl"), b"").unwrap();
        assert!(m.clone().finish(&dir).is_err());
        std::fs::write(dir.join("run.jsonl"), b"{}\n").unwrap();
        m.checks.push(CheckSummary {
            name: "labels_continuous".into(),
            pass: true,
        });
        m.finish(&dir).unwrap();
        let text = std::fs::read_to_string(dir.join("manifest.json")).unwrap();
        let back: Manifest = serde_json::from_str(&text).unwrap();
        assert_eq!(back.command, "simulate");
        assert_eq!(back.seed, 7);
        assert_eq!(back.config_echo, "n = 2\n");
        assert!(back.wall_seconds >= 0.0);
        assert!(back.checks[0].pass);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn datasets_round_trip_through_json_lines() {
        use crate::process::{run_ensemble, ProcessConfig};
        let m0 = crate::linalg::ComplexMatrix::from_rows(
            2,
            &[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)],
        );
        let mut cfg = ProcessConfig::new(2, 0.02, 0.01, m0, 5, 2).unwrap();
        cfg.store_matrices = true;
        let records = run_ensemble(&cfg).unwrap();
        let text = dataset_lines(&records);
        let back = parse_dataset(&text).unwrap();
        assert_eq!(
            back.len(),
            records.iter().map(|r| r.frames.len()).sum::<usize>()
        );
        assert_eq!(back[0].traj, records[0].traj);
        assert_eq!(back[0].n(), 2);
        assert!(back.iter().all(|r| r.matrix.as_ref().unwrap().len() == 4));
        // Measures carry the Ξ and Θ weights.
        let (xi, theta) = back[0].measures();
        assert!((xi.total_mass() - 1.0).abs() < 1e-12);
        let want_theta: f64 = (0..2).map(|j| back[0].overlap[j][j][0] / 4.0).sum();
        assert!((theta.total_mass() - want_theta).abs() < 1e-12);
        // Reruns serialize byte-identically.
        let again = dataset_lines(&run_ensemble(&cfg).unwrap());
        assert_eq!(text, again);
        // Corrupt lines are reported with their line number.
        assert!(parse_dataset("{\"traj\":}").is_err());
    }

    #[test]
    fn report_lines_wrap_moment_and_defect_checks() {
        use crate::sde::{one_step_moment_test, Observable};
        let m = crate::linalg::ComplexMatrix::from_rows(
            2,
            &[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)],
        );
        let r =
            one_step_moment_test(&m, 1e-6, 200, Observable::LambdaCov { j: 0, k: 0 }, 3).unwrap();
        let line = ReportLine::from_moment("sde", &r);
        assert_eq!(line.suite, "sde");
        assert_eq!(line.observable, "lambda_cov(1,1)");
        assert!((line.predicted[0] - 1.0).abs() < 1e-12);
        assert_eq!(line.pass, r.pass);

        let d = ReportLine::from_defect("frames", "biortho(max)", 2e-9, 1e-10);
        assert!(!d.pass);
        assert!((d.z_score - 20.0).abs() < 1e-9);
        let f = ReportLine::from_flag("frames", "m0_frame_skipped", true);
        assert!(f.pass);
        // Report JSON round-trips.
        let parsed: Vec<ReportLine> = serde_json::from_str(&report_json(&[line, d, f])).unwrap();
        assert_eq!(parsed.len(), 3);
        assert_eq!(parsed[1].observable, "biortho(max)");
    }

    #[test]
    fn field_and_pairing_csv_have_the_documented_columns() {
        use crate::field::{field_sweep, FieldGrid};
        let m = crate::linalg::ComplexMatrix::diagonal(&[c(1.0, 0.0), c(2.0, 0.0)]);
        let grid = FieldGrid {
            x0: 0.0,
            x1: 1.0,
            y0: 0.0,
            y1: 0.0,
            nx: 3,
            ny: 1,
            w_sequence: vec![0.5, 0.25],
        };
        let samples = field_sweep(&m, &grid).unwrap();
        let csv = field_csv(0.0, &samples);
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "t,re_z,im_z,re_w,im_w,psi,fk_det,re_dpsi_dw,im_dpsi_dw,mu_lambda,mu_overlap"
        );
        assert_eq!(csv.lines().count(), 1 + 6);
        assert!(csv.lines().nth(1).unwrap().starts_with("0,0,0,0.5,0,"));

        let phi = |z: Complex64| (-(z - c(1.0, 0.0)).norm_sqr()).exp();
        let sweep = crate::field::pairing_limit_w0(&m, &phi, &[0.5, 0.25]).unwrap();
        let pcsv = pairing_csv(&sweep);
        assert!(pcsv.starts_with("w,lambda_pairing,lambda_exact,lambda_abs_err,"));
        assert_eq!(pcsv.lines().count(), 3);
    }

    #[test]
    fn density_csv_round_trips_and_carries_closed_columns_for_builtins() {
        use crate::burgers::{Burgers, DensityGrid};
        let b = Burgers::new(crate::linalg::ComplexMatrix::zeros(2));
        let grid = DensityGrid {
            x0: -1.5,
            x1: 1.5,
            y0: -1.5,
            y1: 1.5,
            nx: 31,
            ny: 31,
        };
        let f = b.density_fields(1.0, &grid).unwrap();
        let csv = density_csv(std::slice::from_ref(&f), Some(BuiltinDensity::SingleSource));
        assert!(csv
            .lines()
            .next()
            .unwrap()
            .ends_with("rho_closed,overlap_closed,in_support_closed"));
        assert_eq!(csv.lines().count(), 1 + 961);
        let rows = parse_density_csv(&csv).unwrap();
        assert_eq!(rows.len(), 961);
        let center = rows.iter().find(|r| r.z.norm() < 1e-12).unwrap();
        assert!(center.in_support);
        assert!((center.rho - 1.0 / std::f64::consts::PI).abs() < 1e-6);

        // Without a builtin the extra columns disappear, and the parser
        // accepts both shapes.
        let plain = density_csv(std::slice::from_ref(&f), None);
        assert!(plain.lines().next().unwrap().ends_with("in_support"));
        assert_eq!(parse_density_csv(&plain).unwrap().len(), 961);
        // A foreign header is rejected.
        assert!(parse_density_csv("a,b,c\n1,2,3\n").is_err());
    }

    #[test]
    fn comparison_tables_render_per_bin_rows_with_summaries() {
        use crate::frame::EmpiricalMeasure;
        use crate::hist::RadialHistogram;
        let mut h = RadialHistogram::uniform(c(0.0, 0.0), 0.0, 1.0, 2).unwrap();
        for k in 0..3 {
            let r = 0.3 + 0.1 * k as f64;
            h.add_measure(&EmpiricalMeasure {
                atoms: vec![(c(r, 0.0), 1.0)],
            });
        }
        let report = h.compare("xi", &|_| 1.0 / std::f64::consts::PI).unwrap();
        let csv = comparison_csv(std::slice::from_ref(&report));
        assert_eq!(
            csv.lines().next().unwrap(),
            "measure,r_lo,r_hi,count,estimate,prediction,std_error,z_score,sup_abs,sup_rel,max_z"
        );
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.lines().nth(1).unwrap().starts_with("xi,0,0.5,"));
        let js = comparison_json(std::slice::from_ref(&report));
        assert!(js.contains("\"label\": \"xi\""));
        assert!(js.contains("sup_abs"));
    }
}
