//! `eacode`: analyze qubit codes and build entanglement-assisted codes from
//! erasure-correctable subsets.
//!
//! Exit codes: 0 ok, 1 input error, 2 not correctable, 3 structure
//! violation, 4 model mismatch. Qubits are numbered from 1.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use eacode::analysis::{self, KlSummary};
use eacode::codes::{self, fixture, Fixture, QuantumCode};
use eacode::qla::Tolerances;
use eacode::simulate::{self, ErrorModel};
use eacode::stab::{self, StabilizerGroup};
use eacode::structure::{self, DecompositionJson, EaCodeJson};
use eacode::Error;

#[derive(Parser, Debug)]
#[command(name = "eacode", version, about = "Entanglement-assisted codes from erasure-correctable subsets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Relative numerical-rank cutoff.
    #[arg(long, global = true, env = "EACODE_TOL_RANK")]
    tol_rank: Option<f64>,
    /// Absolute residual slack for Knill-Laflamme and reconstruction checks.
    #[arg(long, global = true, env = "EACODE_TOL_RESIDUAL")]
    tol_residual: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Model {
    Noiseless,
    Noisy,
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
struct Source {
    /// Built-in code name, see `fixtures --list`.
    #[arg(long)]
    fixture: Option<String>,
    /// Code or stabilizer-group JSON file.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Comma-separated generators, optionally signed: "+XZZXI,-ZXZZX".
    #[arg(long)]
    stabilizers: Option<String>,
}

#[derive(Args, Debug)]
struct Target {
    #[command(flatten)]
    source: Source,
    /// Erased qubits, 1-based and comma separated.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    subset: Vec<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Knill-Laflamme analysis of one erasure set.
    Analyze {
        #[command(flatten)]
        target: Target,
        /// Include the full lambda matrix.
        #[arg(long)]
        full: bool,
    },
    /// Structure decomposition and the resulting EA codes.
    Decompose {
        #[command(flatten)]
        target: Target,
        /// Include the encoding isometry and shared state.
        #[arg(long)]
        full: bool,
    },
    /// Simulated recovery of an EA code.
    Verify {
        #[command(flatten)]
        target: Target,
        #[arg(long, value_enum, default_value_t = Model::Noiseless)]
        model: Model,
        #[arg(long, default_value_t = 0)]
        weight: usize,
        /// Use the compressed shared state.
        #[arg(long, conflicts_with = "presend")]
        compressed: bool,
        /// Send the erased qubits of a codeword ahead of time.
        #[arg(long)]
        presend: bool,
        /// Run outside the validity region and report without a verdict.
        #[arg(long)]
        explore: bool,
    },
    /// Exhaustive minimum distance.
    Distance {
        #[command(flatten)]
        source: Source,
        /// Largest weight searched; defaults to n.
        #[arg(long)]
        max_weight: Option<usize>,
        /// Restrict errors to these 1-based qubits.
        #[arg(long, value_delimiter = ',')]
        on: Vec<usize>,
    },
    /// Classify every erasure set of a given size.
    Scan {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        size: usize,
    },
    /// List built-in codes or emit one as JSON.
    Fixtures {
        #[arg(long, conflicts_with = "emit")]
        list: bool,
        #[arg(long)]
        emit: Option<String>,
        /// Emit the stabilizer group instead of the codewords.
        #[arg(long, requires = "emit")]
        stabilizers: bool,
    },
}

/// A command's result: the JSON report, its text rendering and exit code.
struct Outcome {
    json: Value,
    text: String,
    code: u8,
}

impl Outcome {
    fn ok(json: Value, text: String) -> Self {
        Self { json, text, code: 0 }
    }
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::NotCorrectable { .. } => 2,
        Error::StructureViolation(_) | Error::Consistency(_) => 3,
        Error::ModelMismatch(_) => 4,
        _ => 1,
    }
}

struct Loaded {
    code: QuantumCode,
    group: Option<StabilizerGroup>,
}

fn load(source: &Source) -> Result<Loaded, Error> {
    if let Some(name) = &source.fixture {
        let f: Fixture = name.parse()?;
        return Ok(Loaded {
            code: fixture(f)?,
            group: f.stabilizer_group(),
        });
    }
    let group = if let Some(path) = &source.input {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))?;
        let value: Value = serde_json::from_str(&text)?;
        if value.get("basis").is_some() {
            return Ok(Loaded {
                code: codes::code_from_json(&text)?,
                group: None,
            });
        }
        stab::stabilizer_from_json(&text)?
    } else {
        let gens = source.stabilizers.as_deref().unwrap_or_default();
        let gens: Vec<&str> = gens.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
        StabilizerGroup::from_strings(&gens)?
    };
    Ok(Loaded {
        code: stab::codewords(&group, None)?,
        group: Some(group),
    })
}

fn zero_based(subset: &[usize], n: usize) -> Result<Vec<usize>, Error> {
    if let Some(&q) = subset.iter().find(|&&q| q == 0 || q > n) {
        return Err(Error::Shape(format!("qubit {q} outside 1..{n}")));
    }
    Ok(subset.iter().map(|q| q - 1).collect())
}

fn braces(subset: &[usize]) -> String {
    let inner: Vec<String> = subset.iter().map(usize::to_string).collect();
    format!("{{{}}}", inner.join(","))
}

fn distance_of(code: &QuantumCode) -> Result<usize, Error> {
    Ok(codes::min_distance(code, code.n())?.value().min(code.n()))
}

fn tolerances(cli: &Cli) -> Tolerances {
    let mut tol = Tolerances::default();
    if let Some(r) = cli.tol_rank {
        tol.rank = r;
    }
    if let Some(r) = cli.tol_residual {
        tol.residual = r;
    }
    tol
}

fn analyze(target: &Target, full: bool, tol: &Tolerances) -> Result<Outcome, Error> {
    let loaded = load(&target.source)?;
    let subset = zero_based(&target.subset, loaded.code.n())?;
    if subset.len() > analysis::MAX_SUBSET {
        return analyze_large(&loaded.code, &subset, tol);
    }
    let mut report = analysis::kl_matrix_with(&loaded.code, &subset, tol)?;
    if report.correctable {
        report = analysis::complete_classification(report, tol)?;
    }
    let summary = KlSummary::new(&report, full);
    let mut text = format!("subset: {}\n", braces(&summary.subset));
    if report.correctable {
        let class = report.trichotomy.map_or("unclassified", |t| t.as_str());
        writeln!(text, "correctable: yes, class: {class}, C: {}", report.schmidt_rank()).unwrap();
    } else {
        writeln!(text, "correctable: no").unwrap();
    }
    writeln!(text, "rho_B rank: {}, spectrum: {:?}", summary.rho_b_rank, summary.rho_b_spectrum).unwrap();
    writeln!(text, "lambda rank: {} of {}", summary.lambda_rank, summary.lambda_spectrum.len()).unwrap();
    writeln!(text, "max residual: {:e}", summary.max_residual).unwrap();
    writeln!(text, "codeword marginal ranks: {:?}", summary.codeword_marginal_ranks).unwrap();
    if let Some(lambda) = &summary.lambda {
        writeln!(text, "lambda:").unwrap();
        for row in lambda {
            let cells: Vec<String> = row.iter().map(|[re, im]| format!("{re:+.6}{im:+.6}i")).collect();
            writeln!(text, "  {}", cells.join(" ")).unwrap();
        }
    }
    let code = if report.correctable { 0 } else { 2 };
    Ok(Outcome {
        json: serde_json::to_value(&summary)?,
        text,
        code,
    })
}

/// Beyond the lambda cap only the marginal test runs: a negative verdict is
/// still reported, a positive one cannot be classified.
fn analyze_large(code: &QuantumCode, subset: &[usize], tol: &Tolerances) -> Result<Outcome, Error> {
    let (correctable, residual) = analysis::correctable_by_marginals(code, subset, tol)?;
    if correctable {
        return Err(Error::Size(format!(
            "subset is correctable but classification is limited to |B| <= {}",
            analysis::MAX_SUBSET
        )));
    }
    let one_based: Vec<usize> = subset.iter().map(|q| q + 1).collect();
    let text = format!("subset: {}\ncorrectable: no\nmax marginal deviation: {residual:e}\n", braces(&one_based));
    let json = json!({"subset": one_based, "correctable": false, "max_marginal_deviation": residual});
    Ok(Outcome { json, text, code: 2 })
}

fn ea_line(label: &str, ea: &EaCodeJson) -> String {
    let form = ea.stabilizer_form.as_deref().map(|s| format!(" {s}")).unwrap_or_default();
    format!("{label}: {}{form}, ebit cost {}\n", ea.parameters, ea.ebit_cost)
}

fn decompose(target: &Target, full: bool, tol: &Tolerances) -> Result<Outcome, Error> {
    let loaded = load(&target.source)?;
    let subset = zero_based(&target.subset, loaded.code.n())?;
    let dec = structure::decompose_with(&loaded.code, &subset, tol)?;
    let d = distance_of(&loaded.code)?;
    let plain = EaCodeJson::new(&structure::ea_from_structure(&dec, d));
    let compressed = EaCodeJson::new(&structure::compress(&dec, d)?);
    let info = DecompositionJson::new(&dec);
    let mut text = format!(
        "subset: {}, K: {}, dim A: {}, Gamma_A spectrum: {:?}\n",
        braces(&info.subset),
        info.k_dim,
        info.dim_a,
        info.gamma_spectrum
    );
    writeln!(text, "residual: {:e}, isometry defect: {:e}", info.residual, info.isometry_defect).unwrap();
    text.push_str(&ea_line("structure", &plain));
    text.push_str(&ea_line("compressed", &compressed));
    let mut json = json!({
        "decomposition": json!({
            "n": info.n,
            "subset": info.subset,
            "k_dim": info.k_dim,
            "dim_a": info.dim_a,
            "gamma_spectrum": info.gamma_spectrum,
            "residual": info.residual,
            "isometry_defect": info.isometry_defect,
        }),
        "structure": plain,
        "compressed": compressed,
    });
    if let Some(g) = &loaded.group {
        match stab::ea_params_stab(g, &subset) {
            Ok(p) => {
                let form = p.stabilizer_form().unwrap_or_else(|| p.to_string());
                writeln!(text, "stabilizer: {form}").unwrap();
                json["stabilizer_form"] = json!(form);
            }
            Err(Error::NotCorrectable { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    if full {
        json["decomposition"] = serde_json::to_value(&info)?;
    }
    Ok(Outcome::ok(json, text))
}

struct VerifyArgs {
    model: Model,
    weight: usize,
    compressed: bool,
    presend: bool,
    explore: bool,
}

fn verify(target: &Target, args: &VerifyArgs, tol: &Tolerances) -> Result<Outcome, Error> {
    let loaded = load(&target.source)?;
    let code = &loaded.code;
    let subset = zero_based(&target.subset, code.n())?;
    let model = match args.model {
        Model::Noiseless => ErrorModel::NoiselessEbit,
        Model::Noisy => ErrorModel::NoisyEbit,
    };
    if args.compressed && model == ErrorModel::NoisyEbit && !args.explore {
        return Err(Error::ModelMismatch(
            "a compressed code is only valid when the shared entanglement is noiseless; \
             pass --explore to run it anyway"
                .into(),
        ));
    }
    let dec = structure::decompose_with(code, &subset, tol)?;
    let d = distance_of(code)?;
    let ea = if args.compressed {
        structure::compress(&dec, d)?
    } else if args.presend {
        structure::ea_presend(code, &subset, d)?
    } else {
        structure::ea_from_structure(&dec, d)
    };
    let report = if args.explore {
        simulate::explore_ea(&ea, &dec, code, model, args.weight)?
    } else {
        simulate::verify_ea(&ea, &dec, code, model, args.weight)?
    };
    let verdict = if report.exploratory {
        "exploratory"
    } else if report.passed() {
        "pass"
    } else {
        "fail"
    };
    let mut text = format!(
        "{} code {}, model {}, weight {}\n",
        serde_json::to_value(report.strategy)?.as_str().unwrap_or_default(),
        ea.params,
        serde_json::to_value(report.model)?.as_str().unwrap_or_default(),
        report.error_weight
    );
    writeln!(
        text,
        "errors: {}{}, cases: {}",
        report.errors_checked,
        if report.sampled { " (sampled)" } else { "" },
        report.cases_run
    )
    .unwrap();
    writeln!(text, "min fidelity: {}", report.min_fidelity).unwrap();
    for f in &report.failures {
        writeln!(text, "  failed: {} fidelity {}", f.error, f.fidelity).unwrap();
    }
    writeln!(text, "result: {verdict}").unwrap();
    let code = if report.exploratory || report.passed() { 0 } else { 2 };
    let mut json = serde_json::to_value(&report)?;
    json["parameters"] = json!(ea.params.to_string());
    json["passed"] = json!(report.passed());
    Ok(Outcome {
        json,
        text,
        code,
    })
}

fn distance(source: &Source, max_weight: Option<usize>, on: &[usize]) -> Result<Outcome, Error> {
    let code = load(source)?.code;
    let support = if on.is_empty() {
        (0..code.n()).collect()
    } else {
        zero_based(on, code.n())?
    };
    let dist = codes::min_distance_on(&code, &support, max_weight.unwrap_or(support.len()))?;
    Ok(Outcome::ok(serde_json::to_value(dist)?, format!("{dist}\n")))
}

fn scan(source: &Source, size: usize, tol: &Tolerances) -> Result<Outcome, Error> {
    let code = load(source)?.code;
    let reports = analysis::find_correctable_sets_with(&code, size, tol)?;
    let summaries: Vec<KlSummary> = reports.iter().map(|r| KlSummary::new(r, false)).collect();
    let mut text = String::new();
    for s in &summaries {
        let verdict = if s.correctable { "correctable" } else { "not correctable" };
        let class = s.trichotomy.map_or("-", |t| t.as_str());
        writeln!(text, "{:<16} {verdict:<16} {class:<22} C: {}", braces(&s.subset), s.rho_b_rank).unwrap();
    }
    let correctable = summaries.iter().filter(|s| s.correctable).count();
    writeln!(text, "{} subsets, {correctable} correctable", summaries.len()).unwrap();
    Ok(Outcome::ok(serde_json::to_value(&summaries)?, text))
}

fn fixtures(list: bool, emit: Option<&str>, stabilizers: bool) -> Result<Outcome, Error> {
    match emit {
        Some(name) => {
            let f: Fixture = name.parse()?;
            let text = if stabilizers {
                let g = f
                    .stabilizer_group()
                    .ok_or_else(|| Error::Contract(format!("{f} is not a stabilizer code")))?;
                stab::stabilizer_to_json(&g)?
            } else {
                codes::code_to_json(&fixture(f)?)?
            };
            Ok(Outcome::ok(serde_json::from_str(&text)?, text + "\n"))
        }
        None => {
            let _ = list;
            let mut text = String::new();
            let mut rows = Vec::new();
            for f in Fixture::ALL {
                writeln!(text, "{:<12} {}", f.name(), f.description()).unwrap();
                rows.push(json!({"name": f.name(), "description": f.description()}));
            }
            Ok(Outcome::ok(Value::Array(rows), text))
        }
    }
}

fn run(cli: &Cli) -> Result<Outcome, Error> {
    let tol = tolerances(cli);
    match &cli.command {
        Command::Analyze { target, full } => analyze(target, *full, &tol),
        Command::Decompose { target, full } => decompose(target, *full, &tol),
        Command::Verify {
            target,
            model,
            weight,
            compressed,
            presend,
            explore,
        } => verify(
            target,
            &VerifyArgs {
                model: *model,
                weight: *weight,
                compressed: *compressed,
                presend: *presend,
                explore: *explore,
            },
            &tol,
        ),
        Command::Distance { source, max_weight, on } => distance(source, *max_weight, on),
        Command::Scan { source, size } => scan(source, *size, &tol),
        Command::Fixtures { list, emit, stabilizers } => fixtures(*list, emit.as_deref(), *stabilizers),
    }
}

fn emit(cli: &Cli, body: &str) -> Result<(), String> {
    match &cli.output {
        Some(path) => std::fs::write(path, body).map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    // usage errors share exit code 1 with other input errors
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { 1 } else { 0 };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    let (body, code) = match run(&cli) {
        Ok(out) => {
            let body = match cli.format {
                Format::Text => out.text,
                Format::Json => serde_json::to_string_pretty(&out.json).expect("report serializes") + "\n",
            };
            (body, out.code)
        }
        Err(err) => {
            let code = exit_code(&err);
            match cli.format {
                Format::Text => eprintln!("error: {err}"),
                Format::Json => eprintln!("{}", json!({"error": err.to_string(), "exit_code": code})),
            }
            return ExitCode::from(code);
        }
    };
    if let Err(msg) = emit(&cli, &body) {
        eprintln!("error: {msg}");
        return ExitCode::from(1);
    }
    ExitCode::from(code)
}
