//! `influx` — structural steady-state sensitivity analysis of reaction
//! networks from the command line.
//!
//! Exit codes: 0 success, 1 generic failure, 2 parse/usage error,
//! 3 rank deficiency, 4 structural degeneracy candidate, 5 enumeration
//! budget exceeded, 6 augmenticity violation, 7 numcheck hard violation.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use influx::augment::{
    check_augmenticity, okada_check, random_output_complete_subset, AugmentError, OkadaError,
};
use influx::gf::{check_prime_size, random_prime};
use influx::graphkit::{condense_and_reduce, metabolite_annotations, FullInfluenceGraph};
use influx::influence::{influence_matrix, InfluenceConfig, InfluenceError, InfluenceMatrix};
use influx::network::{parse_network, single_children, ReactionNetwork};
use influx::numcheck::{
    compare_patterns, finite_perturbation, random_affine_model, NumcheckError, DEFAULT_EPS_STEP,
    DEFAULT_TOL_NONZERO, DEFAULT_TOL_ZERO,
};
use influx::oracle::{oracle_influence_matrix, OracleError};
use influx::report::{build_report, to_dot, to_heatmap_csv};

const EXIT_FAIL: u8 = 1;
const EXIT_PARSE: u8 = 2;
const EXIT_RANK: u8 = 3;
const EXIT_DEGENERATE: u8 = 4;
const EXIT_BUDGET: u8 = 5;
const EXIT_COMPARE: u8 = 6;
const EXIT_NUMCHECK: u8 = 7;

#[derive(Parser)]
#[command(
    name = "influx",
    version,
    about = "Which reaction perturbations influence which steady-state fluxes \
             and concentrations, from stoichiometry alone"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct Common {
    /// RNG seed; falls back to $INFLUX_SEED, then 1
    #[arg(long)]
    seed: Option<u64>,
    /// bit width of the random working primes (8..=127)
    #[arg(long, default_value_t = 127)]
    prime_bits: u32,
    /// independent inversion repetitions ORed together
    #[arg(long, default_value_t = 1)]
    repeats: u32,
    /// also compute influence of metabolite-value perturbations (extra columns)
    #[arg(long)]
    extended: bool,
}

impl Common {
    fn config(&self) -> Result<InfluenceConfig, String> {
        let seed = match self.seed {
            Some(s) => s,
            None => match std::env::var("INFLUX_SEED") {
                Ok(v) => v
                    .parse()
                    .map_err(|_| format!("INFLUX_SEED is not a valid seed: `{v}`"))?,
                Err(_) => 1,
            },
        };
        if !(8..=127).contains(&self.prime_bits) {
            return Err(format!("--prime-bits must be in 8..=127, got {}", self.prime_bits));
        }
        if self.repeats < 1 {
            return Err("--repeats must be at least 1".into());
        }
        Ok(InfluenceConfig {
            seed,
            prime_bits: self.prime_bits,
            repeats: self.repeats,
            extended: self.extended,
        })
    }
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Dot,
    Json,
    Csv,
    All,
}

#[derive(Subcommand)]
enum Cmd {
    /// Analyze a network: influence matrix, flux influence graph, exports
    Analyze {
        path: PathBuf,
        #[command(flatten)]
        common: Common,
        /// directory for report.json / graph.dot / heatmap.csv
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::All)]
        format: Format,
    },
    /// Verify structural laws (transitivity, single children) and optionally
    /// the brute-force child-selection oracle
    Verify {
        path: PathBuf,
        #[command(flatten)]
        common: Common,
        /// also compare against exhaustive child-selection enumeration
        #[arg(long)]
        oracle: bool,
    },
    /// Check that every influence of the base network persists in an extension
    Compare {
        base: PathBuf,
        extension: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Floating-point finite-perturbation check of the structural pattern
    Numcheck {
        path: PathBuf,
        #[command(flatten)]
        common: Common,
        /// number of random affine rate models
        #[arg(long, default_value_t = 20)]
        models: u32,
        #[arg(long, default_value_t = DEFAULT_EPS_STEP)]
        eps_step: f64,
        #[arg(long, default_value_t = DEFAULT_TOL_ZERO)]
        tol_zero: f64,
        #[arg(long, default_value_t = DEFAULT_TOL_NONZERO)]
        tol_nonzero: f64,
        /// write per-entry classifications to this CSV file
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Probe random output-complete subnetworks for influence containment
    Okada {
        path: PathBuf,
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 100)]
        probes: u32,
    },
}

fn load_network(path: &Path) -> Result<ReactionNetwork, u8> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        eprintln!("error: cannot read {}: {e}", path.display());
        EXIT_PARSE
    })?;
    parse_network(&text).map_err(|e| {
        eprintln!("error: {}: {e}", path.display());
        EXIT_PARSE
    })
}

/// Parse, check rank, and invert; the common front half of every subcommand.
fn analyze_network(
    path: &Path,
    cfg: &InfluenceConfig,
) -> Result<(ReactionNetwork, InfluenceMatrix), u8> {
    let net = load_network(path)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let field = random_prime(cfg.prime_bits, &mut rng);
    let size = check_prime_size(&net, &field);
    if !size.ample_margin {
        eprintln!(
            "warning: prime of {} bits is small for this network (recommended > {:.0} bits); \
             zero entries carry a weaker guarantee",
            size.prime_bits, size.bound
        );
    }
    if let Err(e) = influx::network::validate_full_rank(&net, &field) {
        eprintln!("error: {}: {e}", path.display());
        return Err(EXIT_RANK);
    }
    match influence_matrix(&net, cfg) {
        Ok(infl) => Ok((net, infl)),
        Err(e @ InfluenceError::StructurallySingular { .. }) => {
            eprintln!("error: {}: {e}", path.display());
            Err(EXIT_DEGENERATE)
        }
    }
}

fn cmd_analyze(
    path: &Path,
    cfg: &InfluenceConfig,
    out_dir: &Path,
    format: Format,
) -> Result<(), u8> {
    let (net, infl) = analyze_network(path, cfg)?;
    let graph = condense_and_reduce(&infl);
    let full = metabolite_annotations(&infl, &graph).map_err(|e| {
        eprintln!("error: inconsistent annotation, likely an unlucky prime: {e}");
        EXIT_DEGENERATE
    })?;
    std::fs::create_dir_all(out_dir).map_err(|e| {
        eprintln!("error: cannot create {}: {e}", out_dir.display());
        EXIT_FAIL
    })?;
    let write = |name: &str, data: &str| -> Result<(), u8> {
        let p = out_dir.join(name);
        std::fs::write(&p, data).map_err(|e| {
            eprintln!("error: cannot write {}: {e}", p.display());
            EXIT_FAIL
        })
    };
    if matches!(format, Format::Json | Format::All) {
        let rep = build_report(&net, cfg, &infl, &full);
        let mut json = serde_json::to_string_pretty(&rep).expect("report serializes");
        json.push('\n');
        write("report.json", &json)?;
    }
    if matches!(format, Format::Dot | Format::All) {
        write("graph.dot", &to_dot(&net, &full))?;
    }
    if matches!(format, Format::Csv | Format::All) {
        write("heatmap.csv", &to_heatmap_csv(&net, &infl))?;
    }
    print_summary(&net, &infl, &full);
    Ok(())
}

fn print_summary(net: &ReactionNetwork, infl: &InfluenceMatrix, full: &FullInfluenceGraph) {
    let multi = full.pure.classes.iter().filter(|c| c.members.len() > 1).count();
    println!(
        "{} reactions, {} metabolites: regular; {} flux classes ({} multi-member), \
         {} reduced edges; false-zero bound {:.3e}",
        net.num_reactions(),
        net.num_metabolites(),
        full.pure.classes.len(),
        multi,
        full.pure.edges.len(),
        infl.false_zero_bound,
    );
}

fn cmd_verify(path: &Path, cfg: &InfluenceConfig, oracle: bool) -> Result<(), u8> {
    let mut ext_cfg = cfg.clone();
    ext_cfg.extended = true;
    let (net, infl) = analyze_network(path, &ext_cfg)?;
    if let Some((alpha, j, beta)) = infl.transitivity_violation() {
        eprintln!("FAIL transitivity: {alpha} ~> {j} and {j} ~> {beta} but not {alpha} ~> {beta}");
        return Err(EXIT_FAIL);
    }
    println!("ok transitivity");
    for (j, mother) in single_children(&net) {
        for jp in 0..net.num_reactions() {
            if infl.flux(j, jp) {
                eprintln!(
                    "FAIL single child `{}` influences flux `{}`",
                    net.reactions[j].name, net.reactions[jp].name
                );
                return Err(EXIT_FAIL);
            }
        }
        for m in 0..net.num_metabolites() {
            if infl.metab(j, m) != (m == mother) {
                eprintln!(
                    "FAIL single child `{}`: I_M must be exactly its mother `{}`",
                    net.reactions[j].name, net.metabolites[mother].name
                );
                return Err(EXIT_FAIL);
            }
        }
    }
    println!("ok single-child laws");
    if oracle {
        let truth = oracle_influence_matrix(&net).map_err(|e| match e {
            OracleError::EnumerationBudgetExceeded(_) => {
                eprintln!("error: {e}");
                EXIT_BUDGET
            }
            OracleError::NotRegular => {
                eprintln!("error: {e}");
                EXIT_DEGENERATE
            }
        })?;
        for beta in 0..truth.rows() {
            for alpha in 0..truth.cols() {
                if infl.get(beta, alpha) != truth.get(beta, alpha) {
                    eprintln!(
                        "FAIL oracle mismatch at row {beta}, column {alpha}: \
                         randomized={} oracle={}",
                        infl.get(beta, alpha),
                        truth.get(beta, alpha)
                    );
                    return Err(EXIT_FAIL);
                }
            }
        }
        println!("ok oracle equivalence ({} entries)", truth.rows() * truth.cols());
    }
    println!("verified {}", path.display());
    Ok(())
}

fn cmd_compare(base: &Path, extension: &Path, cfg: &InfluenceConfig) -> Result<(), u8> {
    let (net0, infl0) = analyze_network(base, cfg)?;
    let (net1, infl1) = analyze_network(extension, cfg)?;
    let rep = check_augmenticity(&net0, &net1, &infl0, &infl1).map_err(|e| match e {
        AugmentError::Oracle(OracleError::EnumerationBudgetExceeded(_)) => {
            eprintln!("error: {e}");
            EXIT_BUDGET
        }
        other => {
            eprintln!("error: not an augmentation: {other}");
            EXIT_PARSE
        }
    })?;
    if !rep.hypothesis_verified {
        println!("note: no nonsingular partial child selection found; persistence is informational");
    }
    let classes = condense_and_reduce(&infl1).classes;
    let big = classes.iter().max_by_key(|c| c.members.len()).expect("nonempty");
    let names: Vec<&str> = big.members.iter().map(|&j| net1.reactions[j].name.as_str()).collect();
    println!(
        "extension: {} new reactions, {} new influences gained on shared indices",
        net1.num_reactions() - net0.num_reactions(),
        rep.gained
    );
    println!("largest class ({} members): {}", names.len(), names.join(","));
    if rep.violations.is_empty() {
        println!("no persistence violations");
        Ok(())
    } else {
        for (j, target) in &rep.violations {
            eprintln!("VIOLATION: influence of `{j}` on {target} was lost in the extension");
        }
        Err(EXIT_COMPARE)
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_numcheck(
    path: &Path,
    cfg: &InfluenceConfig,
    models: u32,
    eps_step: f64,
    tol_zero: f64,
    tol_nonzero: f64,
    csv: Option<&Path>,
) -> Result<(), u8> {
    if tol_zero > 1e-3 * tol_nonzero || !tol_zero.is_finite() || !tol_nonzero.is_finite() {
        eprintln!(
            "error: tolerances must satisfy tol_zero <= 1e-3 * tol_nonzero \
             (got {tol_zero} vs {tol_nonzero})"
        );
        return Err(EXIT_PARSE);
    }
    let (net, infl) = analyze_network(path, cfg)?;
    let mut csv_out = String::from("model,j_star,kind,index,structural,magnitude,class\n");
    let mut soft_checked = 0usize;
    let mut soft_misses = 0usize;
    let mut hard_checked = 0usize;
    for model_idx in 0..models {
        let model = random_affine_model(&net, cfg.seed.wrapping_add(u64::from(model_idx)))
            .map_err(|e| {
                eprintln!("error: model {model_idx}: {e}");
                EXIT_FAIL
            })?;
        for j_star in 0..net.num_reactions() {
            let record = finite_perturbation(&net, &model, j_star, eps_step).map_err(|e| {
                eprintln!("error: model {model_idx}, perturbing {j_star}: {e}");
                EXIT_FAIL
            })?;
            for (kind, values, structural) in [
                ("flux", &record.phi, &(0..net.num_reactions())
                    .map(|j| infl.flux(j_star, j))
                    .collect::<Vec<_>>()),
                ("metabolite", &record.delta_x, &(0..net.num_metabolites())
                    .map(|m| infl.metab(j_star, m))
                    .collect::<Vec<_>>()),
            ] {
                for (idx, (&v, &s)) in values.iter().zip(structural).enumerate() {
                    let class = if s {
                        if v.abs() <= tol_nonzero * record.scale { "soft-miss" } else { "nonzero" }
                    } else if v.abs() >= tol_zero * record.scale {
                        "HARD-VIOLATION"
                    } else {
                        "zero"
                    };
                    csv_out.push_str(&format!(
                        "{model_idx},{},{kind},{idx},{},{:.6e},{class}\n",
                        net.reactions[j_star].name,
                        u8::from(s),
                        v.abs()
                    ));
                }
            }
            match compare_patterns(&record, &infl, tol_zero, tol_nonzero) {
                Ok(rep) => {
                    soft_checked += rep.soft_checked;
                    soft_misses += rep.soft_misses;
                    hard_checked += rep.hard_checked;
                }
                Err(e @ NumcheckError::HardViolation { .. }) => {
                    eprintln!("FAIL model {model_idx}, perturbing {j_star}: {e}");
                    return Err(EXIT_NUMCHECK);
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    return Err(EXIT_PARSE);
                }
            }
        }
    }
    if let Some(p) = csv {
        std::fs::write(p, csv_out).map_err(|e| {
            eprintln!("error: cannot write {}: {e}", p.display());
            EXIT_FAIL
        })?;
    }
    let rate = if soft_checked == 0 { 0.0 } else { soft_misses as f64 / soft_checked as f64 };
    println!(
        "{models} models: {hard_checked} structural zeros numerically confirmed; \
         {soft_misses}/{soft_checked} soft misses ({:.2}%)",
        100.0 * rate
    );
    Ok(())
}

fn cmd_okada(path: &Path, cfg: &InfluenceConfig, probes: u32) -> Result<(), u8> {
    let (net, infl) = analyze_network(path, cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x6f6b_6164_61);
    let field = random_prime(cfg.prime_bits.min(61).max(8), &mut rng);
    let mut admissible = 0u32;
    let mut strict = 0u32;
    let mut attempts = 0u32;
    while admissible < probes && attempts < probes * 50 {
        attempts += 1;
        let (e0, m0) = random_output_complete_subset(&net, &mut rng);
        if e0.is_empty() {
            continue;
        }
        match okada_check(&net, &e0, &m0, &infl, &field) {
            Ok(rep) => {
                admissible += 1;
                if !rep.contained {
                    let names: Vec<&str> =
                        e0.iter().map(|&j| net.reactions[j].name.as_str()).collect();
                    eprintln!("FAIL containment for E0 = {{{}}}", names.join(","));
                    return Err(EXIT_FAIL);
                }
                if rep.strict {
                    strict += 1;
                }
            }
            Err(OkadaError::DimensionMismatch(_)) => continue,
            Err(OkadaError::NotOutputComplete { .. }) => unreachable!("subset is by construction"),
        }
    }
    if admissible < probes {
        eprintln!(
            "error: only {admissible}/{probes} admissible subsets found in {attempts} draws"
        );
        return Err(EXIT_FAIL);
    }
    println!("{admissible} admissible probes, all contained; {strict} strict containments");
    Ok(())
}

fn run() -> Result<(), u8> {
    let cli = Cli::parse();
    let common = match &cli.cmd {
        Cmd::Analyze { common, .. }
        | Cmd::Verify { common, .. }
        | Cmd::Compare { common, .. }
        | Cmd::Numcheck { common, .. }
        | Cmd::Okada { common, .. } => common,
    };
    let cfg = common.config().map_err(|msg| {
        eprintln!("error: {msg}");
        EXIT_PARSE
    })?;
    match cli.cmd {
        Cmd::Analyze { path, out_dir, format, .. } => cmd_analyze(&path, &cfg, &out_dir, format),
        Cmd::Verify { path, oracle, .. } => cmd_verify(&path, &cfg, oracle),
        Cmd::Compare { base, extension, .. } => cmd_compare(&base, &extension, &cfg),
        Cmd::Numcheck { path, models, eps_step, tol_zero, tol_nonzero, csv, .. } => {
            cmd_numcheck(&path, &cfg, models, eps_step, tol_zero, tol_nonzero, csv.as_deref())
        }
        Cmd::Okada { path, probes, .. } => cmd_okada(&path, &cfg, probes),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(code) => ExitCode::from(code),
    }
}
