use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use semigroup_core::linalg::{spectral_norm, CVector};
use semigroup_core::models::evolve;
use semigroup_core::spectral::{
    bromwich_reconstruct, decompose, ContourKind, ContourSpec, SpectralDecomposition,
    DEFAULT_CIRCLE_NODES,
};
use semigroup_core::verification::scans::shifted_weak_norm;
use semigroup_core::verification::{
    c13_bound_check, compute_ledger, dolgopyat_scan, estimate_c1, estimate_c2,
    exponential_decay_check, laplace_tail_bound_check, minimal_regularity,
    oscillatory_bound_check, rapid_decay_check, rapid_scan,
};
use semigroup_core::{build_model, AssumptionParams, GeneratorModel};

use crate::config::{Pipeline, RunConfig};
use crate::report::{
    BromwichRow, CheckOutcome, DecayEntry, DecompositionSection, ModelSummary, PoleRow,
    RunReport, ScanSection, Series, StageError, TimedValue, Timing, SCHEMA_VERSION,
};
use crate::CliError;

/// Pipeline stages selected by a subcommand.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Decompose,
    Verify,
    Ledger,
    Reconstruct,
    Scan,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Self::Decompose => "decompose",
            Self::Verify => "verify",
            Self::Ledger => "ledger",
            Self::Reconstruct => "reconstruct",
            Self::Scan => "scan",
        }
    }
}

pub const EXIT_PASS: u8 = 0;
pub const EXIT_CONFIG: u8 = 1;
pub const EXIT_CHECK_FAILED: u8 = 2;

#[derive(Debug)]
pub struct RunOutcome {
    pub report: RunReport,
    pub series: Vec<Series>,
    pub output_dir: PathBuf,
}

impl RunOutcome {
    pub fn exit_code(&self) -> u8 {
        if self.report.pass {
            EXIT_PASS
        } else {
            EXIT_CHECK_FAILED
        }
    }
}

/// Loads `config_path`, applies the overrides, runs `command` and writes
/// `report.json` plus one CSV per series into the output directory.
pub fn run(
    command: Command,
    config_path: &Path,
    output_dir: Option<PathBuf>,
    seed: Option<u64>,
) -> Result<RunOutcome, CliError> {
    let mut config = RunConfig::load(config_path)?;
    if let Some(seed) = seed {
        config.seed = seed;
    }
    let dir = output_dir
        .or_else(|| config.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("output"));
    let (report, series) = execute(command, &config)?;
    fs::create_dir_all(&dir).map_err(|source| CliError::Io {
        path: dir.clone(),
        source,
    })?;
    report.write(&dir)?;
    for s in &series {
        s.write(&dir)?;
    }
    Ok(RunOutcome {
        report,
        series,
        output_dir: dir,
    })
}

/// Runs the pipeline in memory.
pub fn execute(command: Command, config: &RunConfig) -> Result<(RunReport, Vec<Series>), CliError> {
    config.validate()?;
    let started = Instant::now();
    let model = build_model(&config.model).map_err(|e| CliError::Config(format!("model: {e}")))?;
    let probes = config
        .probes
        .iter()
        .enumerate()
        .map(|(i, p)| p.build(&model, config.seed, i))
        .collect::<Result<Vec<CVector>, CliError>>()?;
    let summary = summarize(&model).map_err(|e| CliError::Config(format!("model: {e}")))?;

    let mut run = Run {
        config,
        model: &model,
        probes,
        params: config.params.clone(),
        scans: ScanSection::default(),
        ledger: None,
        decomposition: None,
        reconstruction: Vec::new(),
        decay: Vec::new(),
        tail_bounds: Vec::new(),
        checks: Vec::new(),
        errors: Vec::new(),
        series: Vec::new(),
        timing: Timing::default(),
    };

    match command {
        Command::Scan => run.timed("scan", Run::scans),
        Command::Ledger => {
            run.timed("scan", Run::scans);
            run.timed("ledger", Run::ledger);
        }
        Command::Decompose => run.timed("decompose", |r| r.decompose(false)),
        Command::Reconstruct => run.timed("reconstruct", Run::reconstruct),
        Command::Verify => {
            run.timed("scan", Run::scans);
            run.timed("ledger", Run::ledger);
            run.timed("decompose", |r| r.decompose(true));
        }
    }
    run.timing.total_seconds = started.elapsed().as_secs_f64();

    let pass = run.errors.is_empty() && run.checks.iter().all(|c| c.pass || !c.gating);
    let report = RunReport {
        schema_version: SCHEMA_VERSION,
        subcommand: command.name().into(),
        config: config.clone(),
        model: summary,
        scans: run.scans,
        ledger: run.ledger,
        decomposition: run.decomposition,
        reconstruction: run.reconstruction,
        decay: run.decay,
        tail_bounds: run.tail_bounds,
        checks: run.checks,
        errors: run.errors,
        pass,
        timing: run.timing,
    };
    Ok((report, run.series))
}

fn summarize(model: &GeneratorModel) -> semigroup_core::Result<ModelSummary> {
    Ok(ModelSummary {
        dimension: model.dim(),
        generator_norm: model.generator_norm(),
        spectral_abscissa: model.spectral_abscissa()?,
        eigenvector_condition: model.eigen()?.condition,
    })
}

struct Run<'a> {
    config: &'a RunConfig,
    model: &'a GeneratorModel,
    probes: Vec<CVector>,
    /// Config parameters with measured constants filled in.
    params: AssumptionParams,
    scans: ScanSection,
    ledger: Option<semigroup_core::verification::ConstantsLedger>,
    decomposition: Option<DecompositionSection>,
    reconstruction: Vec<BromwichRow>,
    decay: Vec<DecayEntry>,
    tail_bounds: Vec<semigroup_core::verification::TailBoundCheck>,
    checks: Vec<CheckOutcome>,
    errors: Vec<StageError>,
    series: Vec<Series>,
    timing: Timing,
}

impl<'a> Run<'a> {
    fn timed(&mut self, stage: &str, f: impl FnOnce(&mut Self) -> semigroup_core::Result<()>) {
        let start = Instant::now();
        if let Err(e) = f(self) {
            self.errors.push(StageError {
                stage: stage.into(),
                message: e.to_string(),
            });
        }
        *self.timing.stages.entry(stage.into()).or_default() += start.elapsed().as_secs_f64();
    }

    fn check(&mut self, name: &str, pass: bool, detail: String) {
        self.checks.push(CheckOutcome {
            name: name.into(),
            pass,
            gating: true,
            detail,
        });
    }

    fn note(&mut self, name: &str, pass: bool, detail: String) {
        self.checks.push(CheckOutcome {
            name: name.into(),
            pass,
            gating: false,
            detail,
        });
    }

    fn scans(&mut self) -> semigroup_core::Result<()> {
        match self.config.pipeline {
            Pipeline::Exponential => self.exponential_scans(),
            Pipeline::Rapid => self.rapid_scans(),
        }
    }

    fn exponential_scans(&mut self) -> semigroup_core::Result<()> {
        let grids = &self.config.grids;
        let c1 = estimate_c1(self.model, &grids.c1().points())?;
        let mut s = Series::new("scan", "c1", &["t", "norm_B_to_B"]);
        for (t, v) in c1.t_grid.iter().zip(&c1.norms) {
            s.push(vec![*t, *v]);
        }
        self.series.push(s);
        self.check(
            "c1_bounded",
            c1.stable,
            format!("C1 = {:.6e} at t = {}", c1.value, c1.argmax_t)
                + &c1.warning.as_ref().map(|w| format!("; {w}")).unwrap_or_default(),
        );
        self.params.c1.get_or_insert(c1.value);

        let c2 = estimate_c2(self.model, &grids.c2().points())?;
        let mut s = Series::new("scan", "c2", &["t", "ratio_B_to_A"]);
        for (t, v) in c2.t_grid.iter().zip(&c2.ratios) {
            s.push(vec![*t, *v]);
        }
        self.series.push(s);
        self.check(
            "c2_stable",
            c2.stable && c2.value <= c2.analytic_bound * (1.0 + 1e-12),
            format!(
                "C2 = {:.6e} (t -> 0 limit {:.6e}, integral bound {:.6e})",
                c2.value, c2.limit_at_zero, c2.analytic_bound
            ),
        );
        self.params.c2.get_or_insert(c2.value);

        let dolgo = dolgopyat_scan(self.model, &self.params, &grids.b(self.params.beta).points())?;
        let mut s = Series::new("scan", "dolgopyat", &["b", "scaled_power_norm"]);
        for (b, v) in dolgo.b_grid.iter().zip(&dolgo.values) {
            s.push(vec![*b, *v]);
        }
        self.series.push(s);
        self.check(
            "dolgopyat",
            dolgo.pass,
            format!(
                "max {:.6e} at b = {}, {:.6e} on the doubled range ({}), C_D = {:.6e}",
                dolgo.measured_max,
                dolgo.worst_b,
                dolgo.extended_max,
                if dolgo.stable { "stable" } else { "unstable" },
                dolgo.c_d
            ),
        );
        self.params.c_dolgo.get_or_insert(dolgo.c_d);
        self.scans.c1 = Some(c1);
        self.scans.c2 = Some(c2);
        self.scans.dolgopyat = Some(dolgo);
        Ok(())
    }

    fn rapid_scans(&mut self) -> semigroup_core::Result<()> {
        let grid = self.config.grids.b(self.params.beta).points();
        let rapid = rapid_scan(self.model, &self.params, &grid)?;
        let mut s = Series::new("scan", "rapid", &["b", "norm_B_to_B"]);
        for (b, v) in rapid.b_grid.iter().zip(&rapid.values) {
            s.push(vec![*b, *v]);
        }
        self.series.push(s);
        self.check(
            "rapid_resolvent",
            rapid.pass,
            match rapid.violation {
                Some(ev) => format!("eigenvalue {ev} lies inside the holomorphy region"),
                None => format!("C10 = {:.6e}, C11 fit = {:.4}", rapid.c10, rapid.c11_fit),
            },
        );
        self.params.c10.get_or_insert(rapid.c10);
        self.params.c11.get_or_insert(rapid.c11_fit);

        let order = self.config.rapid.c13_order;
        let c13 = c13_bound_check(self.model, &self.params, &self.probes[0], order, &grid)?;
        let mut s = Series::new("scan", "c13", &["b", "full", "regular_part"]);
        for ((b, v), r) in c13.b_grid.iter().zip(&c13.values).zip(&c13.regular_values) {
            s.push(vec![*b, *v, *r]);
        }
        self.series.push(s);
        self.check(
            "c13_regular_part",
            c13.regular_stable,
            format!("max {:.6e} for n = {order}", c13.regular_part),
        );
        self.note(
            "c13_full_resolvent",
            c13.stable,
            format!(
                "max {:.6e} for n = {order}; polynomial terms of R(z)mu decay only like 1/|b|",
                c13.measured
            ),
        );
        self.scans.rapid = Some(rapid);
        self.scans.c13 = Some(c13);
        Ok(())
    }

    fn ledger(&mut self) -> semigroup_core::Result<()> {
        if self.config.pipeline != Pipeline::Exponential {
            self.note(
                "ledger",
                true,
                "the constants ledger belongs to the exponential pipeline; skipped".into(),
            );
            return Ok(());
        }
        let model = self.model;
        let ell = self.params.ell;
        let ledger = match compute_ledger(&self.params, |b| shifted_weak_norm(model, ell, b)) {
            Ok(l) => l,
            Err(e) => {
                self.check("ledger", false, e.to_string());
                return Err(e);
            }
        };
        self.check("ledger", true, format!("C_june = {:.6e}", ledger.c_june));

        let grid = self.config.grids.b(self.params.beta).points();
        let osc = oscillatory_bound_check(self.model, &self.params, ledger.c4, &grid)?;
        let mut s = Series::new("scan", "oscillatory", &["b", "b_times_norm_B_to_A"]);
        for (b, v) in osc.b_grid.iter().zip(&osc.values) {
            s.push(vec![*b, *v]);
        }
        self.series.push(s);
        self.check(
            "oscillatory",
            osc.pass,
            format!("measured {:.6e} vs ledger C4 {:.6e}", osc.c4_measured, osc.c4_ledger),
        );
        self.scans.oscillatory = Some(osc);
        self.ledger = Some(ledger);
        Ok(())
    }

    fn decompose(&mut self, with_decay: bool) -> semigroup_core::Result<()> {
        let contour = self.config.contour();
        let decomposition = match decompose(self.model, &self.params, &contour) {
            Ok(d) => d,
            Err(e) => {
                self.check("decomposition", false, e.to_string());
                return Err(e);
            }
        };
        self.record_decomposition(&decomposition, contour)?;
        if with_decay {
            match self.config.pipeline {
                Pipeline::Exponential => self.exponential_decay(&decomposition)?,
                Pipeline::Rapid => self.rapid_decay(&decomposition)?,
            }
        }
        Ok(())
    }

    fn record_decomposition(
        &mut self,
        d: &SpectralDecomposition<'_>,
        contour: ContourSpec,
    ) -> semigroup_core::Result<()> {
        let tol = self.config.tolerances;
        let mut section = DecompositionSection {
            contour,
            path: d.path,
            poles: d
                .poles
                .iter()
                .map(|p| PoleRow {
                    value: p.value,
                    multiplicity: p.multiplicity,
                    order: p.order,
                    trace: p.projector.trace(),
                    radius: p.radius,
                })
                .collect(),
            violations: d.violations.clone(),
            projector_form_holds: d.projector_form_holds(),
            idempotence_defect: d.idempotence_defect(),
            annihilation_defect: d.annihilation_defect(),
            trace_defect: d.trace_defect(),
            path_agreement: Vec::new(),
            reconstruction_residual: Vec::new(),
        };
        let mut s = Series::new("decompose", "paths", &["t", "path_agreement", "reconstruction_residual"]);
        for &t in &self.config.reconstruct.times {
            let agreement = d.path_agreement(t)?;
            let residual = d.reconstruction_residual(t)?;
            s.push(vec![t, agreement, residual]);
            section.path_agreement.push(TimedValue { t, value: agreement });
            section.reconstruction_residual.push(TimedValue { t, value: residual });
        }
        self.series.push(s);

        let worst_path = section.path_agreement.iter().map(|v| v.value).fold(0.0, f64::max);
        let worst_rec = section.reconstruction_residual.iter().map(|v| v.value).fold(0.0, f64::max);
        self.check(
            "projector_algebra",
            section.idempotence_defect <= tol.projector && section.annihilation_defect <= tol.projector,
            format!(
                "idempotence {:.3e}, annihilation {:.3e}",
                section.idempotence_defect, section.annihilation_defect
            ),
        );
        self.check(
            "projector_trace",
            section.trace_defect <= tol.trace,
            format!("max |trace - multiplicity| = {:.3e}", section.trace_defect),
        );
        self.check(
            "pole_confinement",
            section.violations.is_empty(),
            format!("{} pole(s) outside |Im z| <= beta", section.violations.len()),
        );
        self.check(
            "path_agreement",
            worst_path <= tol.path_agreement,
            format!("max subtraction/contour gap {worst_path:.3e}"),
        );
        self.check(
            "reconstruction",
            worst_rec <= tol.reconstruction,
            format!("max residual {worst_rec:.3e}"),
        );
        self.note(
            "projector_form",
            section.projector_form_holds,
            "all poles semisimple, no polynomial terms needed".into(),
        );
        self.decomposition = Some(section);
        Ok(())
    }

    fn exponential_decay(&mut self, d: &SpectralDecomposition<'_>) -> semigroup_core::Result<()> {
        let Some(c_june) = self.ledger.as_ref().map(|l| l.c_june) else {
            self.check("decay", false, "no ledger available for C_june".into());
            return Ok(());
        };
        let grid = self.config.grids.decay().points();
        for (i, mu) in self.probes.clone().iter().enumerate() {
            let report = exponential_decay_check(d, c_june, mu, self.params.ell, &grid)?;
            self.decay_series(i, &report);
            self.check(
                &format!("decay_probe{i}"),
                report.pass,
                format!(
                    "bound {}, fitted rate {}",
                    if report.bound_holds { "holds" } else { "violated" },
                    report.fitted_rate.map_or("below floor".into(), |r| format!("{r:.4}"))
                ),
            );
            self.decay.push(DecayEntry { probe: i, report });
        }
        Ok(())
    }

    fn rapid_decay(&mut self, d: &SpectralDecomposition<'_>) -> semigroup_core::Result<()> {
        let c11 = match self.params.c11 {
            Some(v) => v,
            None => rapid_scan(self.model, &self.params, &self.config.grids.b(self.params.beta).points())?.c11_fit,
        };
        let c12 = match self.config.contour().kind {
            ContourKind::CurvedRapid { c12, .. } => c12,
            _ => self.params.c12,
        };
        let p = self.config.rapid.p;
        let q = self.config.rapid.q.unwrap_or_else(|| minimal_regularity(p, c11, c12));
        let grid = self.config.grids.decay().points();
        for (i, mu) in self.probes.clone().iter().enumerate() {
            let report = rapid_decay_check(d, mu, p, q, c11, c12, &grid)?;
            self.decay_series(i, &report);
            self.check(
                &format!("decay_probe{i}"),
                report.pass,
                format!(
                    "p = {p}, q = {q}, C_p = {:.6e}, tail slope {}",
                    report.constant,
                    report.fitted_rate.map_or("below floor".into(), |r| format!("{r:.4}"))
                ),
            );
            self.decay.push(DecayEntry { probe: i, report });
        }
        let mut all = true;
        let mut alternate = true;
        for n in 0..=5 {
            for t in [0.5, 1.0, 2.0, 5.0] {
                let c = laplace_tail_bound_check(n, t, 10.0)?;
                all &= c.pass;
                alternate &= c.alternate_holds;
                self.tail_bounds.push(c);
            }
        }
        self.check("tail_integral_chained", all, "I(n) <= n! t^-(n+1)".into());
        self.note("tail_integral_alternate", alternate, "I(n) <= n! t^-n".into());
        Ok(())
    }

    fn decay_series(&mut self, probe: usize, report: &semigroup_core::verification::DecayReport) {
        let mut s = Series::new(
            "decay",
            &format!("remainder_probe{probe}"),
            &["t", "remainder_norm_A", "bound"],
        );
        for ((t, v), b) in report
            .t_grid
            .iter()
            .zip(&report.remainder_norms)
            .zip(&report.bound_values)
        {
            s.push(vec![*t, *v, *b]);
        }
        self.series.push(s);
    }

    fn reconstruct(&mut self) -> semigroup_core::Result<()> {
        let settings = &self.config.reconstruct;
        let abscissa = self.model.spectral_abscissa()?.max(0.0);
        let mut s = Series::new("reconstruct", "bromwich", &["t", "a", "b_cut", "error"]);
        let mut worst: f64 = 0.0;
        for &t in &settings.times {
            let a = settings.bromwich_a.unwrap_or(abscissa + 1.0 / t);
            let contour = ContourSpec {
                kind: ContourKind::BromwichLine {
                    a,
                    b_cut: settings.b_cut,
                    step: settings.step,
                },
                node_count: DEFAULT_CIRCLE_NODES,
            };
            let r = bromwich_reconstruct(self.model, t, &contour)?;
            let error = spectral_norm(&(r.matrix - evolve(self.model, t)?));
            worst = worst.max(error);
            s.push(vec![t, a, r.b_cut, error]);
            self.reconstruction.push(BromwichRow {
                t,
                a,
                b_cut: r.b_cut,
                step: r.step,
                error,
            });
        }
        self.series.push(s);
        let tol = self.config.tolerances.bromwich;
        self.check(
            "bromwich",
            worst <= tol,
            format!("max ||approx - T_t|| = {worst:.3e}"),
        );
        Ok(())
    }
}
