//! `dcgen`: generate datacenter hardware designs from a rack or power target.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgGroup, Parser};
use dcgen_core::catalog::{Catalog, DatacenterType, ReferenceLibrary, Year};
use dcgen_core::error::{DcgenError, ErrorKind};
use dcgen_core::facility::{Redundancy, RedundancyPolicy};
use dcgen_core::it_sizing::SizingTarget;
use dcgen_core::scenario::{
    self, parse_sweep_file, run, sweep, sweep_csv, Execution, HeatSinkChoice, ScenarioRequest,
    PAPER_CASE_STUDIES,
};
use dcgen_core::selector::Objective;

const CATALOG_FILE: &str = "catalog.json";
const LIBRARY_FILE: &str = "reference_library.json";

#[derive(Debug, Parser)]
#[command(
    name = "dcgen",
    version,
    about = "Datacenter hardware design generator"
)]
#[command(group(ArgGroup::new("target").args(["racks", "power_mw"])))]
struct Args {
    /// Datacenter type: ai-training, mixed, ai-inference or cloud.
    #[arg(long = "type", value_parser = parse_type)]
    dc_type: Option<DatacenterType>,

    /// Year of operation: 2024, 2027 or 2029.
    #[arg(long, value_parser = parse_year)]
    year: Option<Year>,

    /// Target number of racks.
    #[arg(long)]
    racks: Option<u64>,

    /// Target peak IT power in MW.
    #[arg(long = "power-mw")]
    power_mw: Option<f64>,

    /// Named reference system used instead of the canonical configuration.
    #[arg(long)]
    reference: Option<String>,

    /// Redundancy: n+R, 2n, 4n3, ...
    #[arg(long, value_parser = parse_redundancy)]
    redundancy: Option<Redundancy>,

    /// Fractional oversizing applied before counting units.
    #[arg(long = "safety-margin")]
    safety_margin: Option<f64>,

    /// Selection objective: space or power.
    #[arg(long, value_parser = parse_objective)]
    objective: Option<Objective>,

    /// Heat sink: evaporative, dry or both.
    #[arg(long = "heat-sink", value_parser = parse_heat_sink)]
    heat_sink: Option<HeatSinkChoice>,

    /// Rack height that all racks are normalized to.
    #[arg(long)]
    ru: Option<u32>,

    /// Equipment catalog file.
    #[arg(long)]
    catalog: Option<PathBuf>,

    /// Reference library file.
    #[arg(long)]
    library: Option<PathBuf>,

    /// Output file (single design) or directory (sweep). Stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Sweep preset name (paper-case-studies) or sweep file.
    #[arg(long, conflicts_with_all = ["target", "reference", "dc_type", "year"])]
    sweep: Option<String>,

    /// Directory holding catalog.json and reference_library.json.
    #[arg(long = "data-dir", env = "DCGEN_DATA_DIR", hide_env_values = true)]
    data_dir: Option<PathBuf>,
}

fn parse_type(s: &str) -> Result<DatacenterType, String> {
    DatacenterType::from_slug(s)
        .ok_or_else(|| format!("expected ai-training, mixed, ai-inference or cloud, got `{s}`"))
}

fn parse_year(s: &str) -> Result<Year, String> {
    s.parse::<u16>()
        .map_err(|e| e.to_string())
        .and_then(Year::try_from)
}

fn parse_redundancy(s: &str) -> Result<Redundancy, String> {
    s.parse().map_err(|e: DcgenError| e.to_string())
}

fn parse_objective(s: &str) -> Result<Objective, String> {
    s.parse().map_err(|e: DcgenError| e.to_string())
}

fn parse_heat_sink(s: &str) -> Result<HeatSinkChoice, String> {
    s.parse().map_err(|e: DcgenError| e.to_string())
}

struct Failure {
    code: u8,
    message: String,
}

impl From<DcgenError> for Failure {
    fn from(e: DcgenError) -> Self {
        let code = match e.kind() {
            ErrorKind::Usage => 2,
            ErrorKind::Data => 3,
            ErrorKind::Infeasible => 4,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

fn write_err(path: &Path, e: std::io::Error) -> Failure {
    Failure {
        code: 3,
        message: format!("cannot write {}: {e}", path.display()),
    }
}

fn load_data(args: &Args) -> Result<(Catalog, ReferenceLibrary), Failure> {
    let from_dir = |file: &str| args.data_dir.as_ref().map(|d| d.join(file));
    let catalog = match args.catalog.clone().or_else(|| from_dir(CATALOG_FILE)) {
        Some(p) => Catalog::load(p)?,
        None => Catalog::builtin(),
    };
    let library = match args.library.clone().or_else(|| from_dir(LIBRARY_FILE)) {
        Some(p) => ReferenceLibrary::load(p)?,
        None => ReferenceLibrary::builtin(),
    };
    Ok((catalog, library))
}

fn apply_overrides(args: &Args, req: &mut ScenarioRequest) {
    if let Some(r) = args.redundancy {
        req.policy.redundancy = r;
    }
    if let Some(sm) = args.safety_margin {
        req.policy.safety_margin = sm;
    }
    if let Some(o) = args.objective {
        req.objective = o;
    }
    if let Some(h) = args.heat_sink {
        req.heat_sink = h;
    }
    if let Some(ru) = args.ru {
        req.normalized_ru = ru;
    }
}

fn single_request(args: &Args) -> Result<ScenarioRequest, Failure> {
    let target = match (args.racks, args.power_mw) {
        (Some(n), None) => SizingTarget::RackCount(n),
        (None, Some(p)) => SizingTarget::PowerMw(p),
        _ => return Err(usage("one of --racks or --power-mw is required")),
    };
    let mut req = match (&args.reference, args.dc_type, args.year) {
        (Some(name), None, None) => ScenarioRequest::named(name, target),
        (Some(_), _, _) => {
            return Err(usage(
                "--reference cannot be combined with --type or --year",
            ))
        }
        (None, Some(t), Some(y)) => ScenarioRequest::canonical(t, y, target),
        (None, _, _) => {
            return Err(usage(
                "--type and --year are required unless --reference is given",
            ))
        }
    };
    apply_overrides(args, &mut req);
    req.validate()?;
    Ok(req)
}

fn sweep_requests(args: &Args, spec: &str) -> Result<Vec<ScenarioRequest>, Failure> {
    let mut reqs = if spec == PAPER_CASE_STUDIES {
        scenario::paper_case_studies()
    } else {
        let path = Path::new(spec);
        if !path.exists() {
            return Err(usage(format!(
                "`{spec}` is neither a sweep preset nor an existing file"
            )));
        }
        let text = fs::read_to_string(path).map_err(|source| DcgenError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        parse_sweep_file(&text)?
    };
    for r in &mut reqs {
        apply_overrides(args, r);
        r.validate()?;
    }
    Ok(reqs)
}

/// Distinct file stems for the sweep's design documents.
fn file_stems(reqs: &[ScenarioRequest]) -> Vec<String> {
    let mut seen = std::collections::BTreeMap::<String, u32>::new();
    reqs.iter()
        .map(|r| {
            let label: String = r
                .label()
                .chars()
                .map(|c| {
                    if c.is_ascii_alphanumeric() || c == '-' || c == '.' || c == '_' {
                        c
                    } else {
                        '_'
                    }
                })
                .collect();
            let n = seen.entry(label.clone()).or_insert(0);
            *n += 1;
            if *n == 1 {
                label
            } else {
                format!("{label}-{n}")
            }
        })
        .collect()
}

fn run_sweep(args: &Args, spec: &str) -> Result<(), Failure> {
    let reqs = sweep_requests(args, spec)?;
    let (catalog, library) = load_data(args)?;
    let outcomes = sweep(&reqs, &catalog, &library, Execution::default());
    let csv = sweep_csv(&outcomes);
    match &args.out {
        None => print!("{csv}"),
        Some(dir) => {
            let designs = dir.join("designs");
            fs::create_dir_all(&designs).map_err(|e| write_err(&designs, e))?;
            let path = dir.join("sweep.csv");
            fs::write(&path, csv).map_err(|e| write_err(&path, e))?;
            for (o, stem) in outcomes.iter().zip(file_stems(&reqs)) {
                if let Ok(doc) = &o.result {
                    let path = designs.join(format!("{stem}.json"));
                    fs::write(&path, doc.to_json()).map_err(|e| write_err(&path, e))?;
                }
            }
        }
    }
    let failed = outcomes.iter().filter(|o| o.result.is_err()).count();
    if failed > 0 {
        eprintln!(
            "dcgen: {failed} of {} scenarios failed; see the error column",
            outcomes.len()
        );
    }
    Ok(())
}

fn run_single(args: &Args) -> Result<(), Failure> {
    let req = single_request(args)?;
    let (catalog, library) = load_data(args)?;
    let doc = run(&req, &catalog, &library)?;
    let json = doc.to_json();
    match &args.out {
        Some(path) => fs::write(path, json).map_err(|e| write_err(path, e))?,
        None => std::io::stdout()
            .write_all(json.as_bytes())
            .map_err(|e| write_err(Path::new("<stdout>"), e))?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    if let Some(sm) = args.safety_margin {
        let policy = RedundancyPolicy {
            safety_margin: sm,
            ..RedundancyPolicy::default()
        };
        if let Err(e) = policy.validate() {
            eprintln!("dcgen: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match &args.sweep {
        Some(spec) => run_sweep(&args, spec),
        None => run_single(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("dcgen: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
