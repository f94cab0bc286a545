use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context as _, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use xmlcsr::bench::{self, Axis, Model, SweepConfig};
use xmlcsr::csr::validate_timestamp;
use xmlcsr::demo::{self, Scenario};
use xmlcsr::manifest::{encode_bytes, DigestEncoding, IntegrityManifest};
use xmlcsr::verify::{verify_with, VerifyOptions};
use xmlcsr::{
    csr_digest, parse_document, parse_manifest, timestamped_seal, ContextSet, HashAlgorithmId, HashCounter,
    NodeSelector, Verdict, XmlNode,
};

const EXIT_FAIL: u8 = 1;
const EXIT_ERROR: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "xmlcsr", version, about = "Content, structure and context integrity digests for XML")]
struct Cli {
    /// Emit machine-readable JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Digest an element and write its integrity manifest.
    Digest(DigestArgs),
    /// Check a document against a manifest.
    Verify(VerifyArgs),
    /// Sweep generated documents and compare hash counts.
    Bench(BenchArgs),
    /// Tamper with the bundled certificate and show what each digest notices.
    Demo(DemoArgs),
}

#[derive(Debug, Args)]
struct DigestArgs {
    input: PathBuf,
    #[arg(long, default_value = "csr")]
    model: Model,
    #[arg(long, env = "XMLCSR_ALGO", default_value = "sha1")]
    algo: HashAlgorithmId,
    /// Element to sign. Defaults to the document root.
    #[arg(long)]
    target: Option<NodeSelector>,
    /// Context element; repeat for several.
    #[arg(long = "context")]
    context: Vec<NodeSelector>,
    /// Seal with this creation time instead of the document's own.
    #[arg(long)]
    timestamp: Option<String>,
    #[arg(long, default_value = xmlcsr::DEFAULT_TIMESTAMP_ATTRIBUTE)]
    timestamp_attr: String,
    /// Manifest path. Defaults to `<input>.manifest.xml`.
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long, default_value = "base64")]
    encoding: DigestEncoding,
    /// Also print the number of hash invocations.
    #[arg(long)]
    stats: bool,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    input: PathBuf,
    #[arg(short, long)]
    manifest: PathBuf,
    #[arg(long, default_value = xmlcsr::DEFAULT_TIMESTAMP_ATTRIBUTE)]
    timestamp_attr: String,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(long, default_value = "depth")]
    axis: Axis,
    #[arg(long, default_value_t = 10)]
    from: usize,
    #[arg(long, default_value_t = 150)]
    to: usize,
    #[arg(long, default_value_t = 10)]
    step: usize,
    #[arg(long, default_value_t = 10)]
    repeat: usize,
    #[arg(long, env = "XMLCSR_ALGO", value_delimiter = ',', default_value = "sha1")]
    algo: Vec<HashAlgorithmId>,
    #[arg(long, value_delimiter = ',', default_value = "csr,domhash,xhash,bertino")]
    model: Vec<Model>,
    #[arg(long, default_value_t = 5)]
    per_level: usize,
    #[arg(long, default_value_t = 32)]
    payload: usize,
    #[arg(long, default_value_t = 1)]
    attributes: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Measure sweep points on separate threads.
    #[arg(long)]
    parallel: bool,
    /// CSV path. Defaults to `bench-<axis>.csv`.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct DemoArgs {
    scenario: Scenario,
    #[arg(long, env = "XMLCSR_ALGO", default_value = "sha1")]
    algo: HashAlgorithmId,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_ERROR) } else { ExitCode::SUCCESS };
        }
    };
    let json = cli.json;
    let outcome = match cli.command {
        Command::Digest(args) => cmd_digest(args, json),
        Command::Verify(args) => cmd_verify(args, json),
        Command::Bench(args) => cmd_bench(args, json),
        Command::Demo(args) => cmd_demo(args, json),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

fn read_document(path: &Path) -> Result<XmlNode> {
    let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    parse_document(&bytes).with_context(|| format!("cannot parse {}", path.display()))
}

fn cmd_digest(args: DigestArgs, json: bool) -> Result<ExitCode> {
    if let Some(t) = &args.timestamp {
        validate_timestamp(t)?;
    }
    if args.model != Model::Csr && (!args.context.is_empty() || args.timestamp.is_some()) {
        bail!("--context and --timestamp only apply to --model csr");
    }
    let doc = read_document(&args.input)?;
    let target = match args.target {
        Some(t) => t,
        None => NodeSelector::for_index_path(&doc, &[]).context("document has no root")?,
    };
    let mut counter = HashCounter::new();

    if args.model != Model::Csr {
        let node = target.resolve(&doc)?.node;
        let digest = args.model.digest(node, args.algo, &mut counter);
        let encoded = encode_bytes(digest.as_bytes(), args.encoding);
        if json {
            let mut out = json!({ "model": args.model.name(), "algo": args.algo.name(), "digest": encoded });
            if args.stats {
                out["hash_count"] = counter.count().into();
            }
            println!("{out}");
        } else {
            println!("{encoded}");
            if args.stats {
                println!("hashes: {}", counter.count());
            }
        }
        return Ok(ExitCode::SUCCESS);
    }

    let context = ContextSet::new(&doc, args.context)?;
    let mut digest = csr_digest(&doc, &target, &context, args.algo, &mut counter)?;
    let timestamp = args
        .timestamp
        .or_else(|| doc.attribute(&args.timestamp_attr).map(str::to_owned));
    if let Some(t) = &timestamp {
        timestamped_seal(&mut digest, t, args.algo, &mut counter)
            .with_context(|| format!("invalid `{}` timestamp", args.timestamp_attr))?;
    }
    let manifest = IntegrityManifest::from_digest(&digest, &target, &context, args.encoding);
    let output = args.output.unwrap_or_else(|| default_manifest_path(&args.input));
    if output == args.input {
        bail!("refusing to overwrite the input document");
    }
    fs::write(&output, manifest.to_xml()).with_context(|| format!("cannot write {}", output.display()))?;

    let csr = manifest.csr.encode();
    let seal = manifest.seal.as_ref().map(|s| s.digest.encode());
    if json {
        let mut out = json!({
            "model": "csr",
            "algo": args.algo.name(),
            "target": target.to_string(),
            "digest": csr,
            "seal": seal,
            "timestamp": timestamp,
            "manifest": output.display().to_string(),
        });
        if args.stats {
            out["hash_count"] = counter.count().into();
        }
        println!("{out}");
    } else {
        println!("{csr}");
        if let Some(seal) = seal {
            println!("seal: {seal}");
        }
        if args.stats {
            println!("hashes: {}", counter.count());
        }
        eprintln!("manifest written to {}", output.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn default_manifest_path(input: &Path) -> PathBuf {
    let mut name = input.file_stem().unwrap_or_default().to_os_string();
    name.push(".manifest.xml");
    input.with_file_name(name)
}

fn cmd_verify(args: VerifyArgs, json: bool) -> Result<ExitCode> {
    let doc = read_document(&args.input)?;
    let bytes = fs::read(&args.manifest).with_context(|| format!("cannot read {}", args.manifest.display()))?;
    let manifest = parse_manifest(&bytes).with_context(|| format!("invalid manifest {}", args.manifest.display()))?;
    let options = VerifyOptions {
        timestamp_attribute: args.timestamp_attr,
    };
    let verdict = verify_with(&doc, &manifest, &options);
    if json {
        let out = json!({
            "verdict": if verdict.is_pass() { "pass" } else { "fail" },
            "facet": verdict.facet().map(|f| f.as_str()),
        });
        println!("{out}");
    } else {
        println!("{verdict}");
    }
    Ok(match verdict {
        Verdict::Pass => ExitCode::SUCCESS,
        Verdict::Fail(_) => ExitCode::from(EXIT_FAIL),
    })
}

fn cmd_bench(args: BenchArgs, json: bool) -> Result<ExitCode> {
    let points = bench::range_points(args.from, args.to, args.step)?;
    let axis_name = match args.axis {
        Axis::Depth => "depth",
        Axis::Width => "width",
    };
    let output = args.output.unwrap_or_else(|| PathBuf::from(format!("bench-{axis_name}.csv")));
    let config = SweepConfig {
        algos: args.algo,
        models: args.model,
        repeat: args.repeat,
        per_level: args.per_level,
        payload: args.payload,
        attributes: args.attributes,
        seed: args.seed,
        parallel: args.parallel,
        ..SweepConfig::new(args.axis, points)
    };
    let results = bench::run_sweep(&config)?;
    bench::export_results(&results, &output).with_context(|| format!("cannot write {}", output.display()))?;

    let orderings = bench::orderings(&results);
    let all_hold = orderings.iter().all(|o| o.holds());
    if json {
        let out = json!({
            "csv": output.display().to_string(),
            "results": results,
            "orderings": orderings.iter().map(|o| json!({
                "algo": o.algo.name(),
                "value": o.value,
                "csr": o.csr,
                "domhash": o.domhash,
                "bertino": o.bertino,
                "holds": o.holds(),
            })).collect::<Vec<_>>(),
        });
        println!("{out}");
    } else {
        print!("{}", bench::summary_table(&results));
        for o in &orderings {
            println!(
                "{axis_name}={:<4} {:<6} csr {} < domhash {} < bertino {}: {}",
                o.value,
                o.algo,
                o.csr,
                o.domhash,
                o.bertino,
                if o.holds() { "holds" } else { "VIOLATED" }
            );
        }
        eprintln!("results written to {}", output.display());
    }
    Ok(if all_hold { ExitCode::SUCCESS } else { ExitCode::from(EXIT_FAIL) })
}

fn cmd_demo(args: DemoArgs, json: bool) -> Result<ExitCode> {
    let report = demo::run(args.scenario, args.algo);
    if json {
        let out = json!({
            "scenario": report.scenario.name(),
            "algo": args.algo.name(),
            "dom_hash_unchanged": report.dom_hash_unchanged,
            "original": report.original.to_string(),
            "tampered": report.tampered.to_string(),
            "tampered_facet": report.tampered.facet().map(|f| f.as_str()),
            "transcript": report.transcript,
        });
        println!("{out}");
    } else {
        for line in &report.transcript {
            println!("{line}");
        }
    }
    Ok(ExitCode::SUCCESS)
}
