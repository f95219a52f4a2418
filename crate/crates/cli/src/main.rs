use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use bicm_gmi_lab::detector::read_llr_dump;
use bicm_gmi_lab::harness::{
    build_luts, run_fer_experiment, run_gmi_analysis, run_table1, search_dump, snr_tag, Manifest,
    ScalingMode, SimConfig,
};
use bicm_gmi_lab::online_scaling::OnlineMode;
use clap::{Args, Parser, Subcommand, ValueEnum};

/// BICM link-level simulation with GMI analysis and LLR scaling.
#[derive(Parser, Debug)]
#[command(name = "bicm-gmi-lab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// JSON experiment configuration; omitted fields take defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// SNR points in dB, overriding the configuration.
    #[arg(long, value_delimiter = ',', num_args = 1.., allow_negative_numbers = true)]
    snr: Vec<f64>,
    /// Master seed, overriding the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// I-curves and factor tables for every scaling scheme, genie bits.
    AnalyzeGmi(Common),
    /// Per-class scaling LUTs from uncoded genie data.
    BuildLut(Common),
    /// Uniform factors by GMI and by the consistency mean in the fixed 64-QAM scenario.
    Table1 {
        #[command(flatten)]
        common: Common,
        /// Number of 64-QAM symbols.
        #[arg(long, default_value_t = 2_000_000)]
        samples: usize,
    },
    /// Coded frame-error-rate experiment.
    Fer(Common),
    /// Online factor search on an LLR dump (`frame,pos,bit_channel,llr,true_bit`).
    SearchDemo {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        dump: PathBuf,
        /// Search mode; defaults to the configured online mode, else one-level.
        #[arg(long, value_enum)]
        mode: Option<Mode>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Mode {
    #[value(name = "1level")]
    OneLevel,
    #[value(name = "2level")]
    TwoLevel,
}

fn load_config(common: &Common) -> Result<SimConfig> {
    let mut config = match &common.config {
        Some(path) => {
            SimConfig::load(path).with_context(|| format!("loading {}", path.display()))?
        }
        None => SimConfig::default(),
    };
    if !common.snr.is_empty() {
        config.snr_db = common.snr.clone();
    }
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    config.validate()?;
    Ok(config)
}

fn run(cli: Cli) -> Result<PathBuf> {
    match cli.command {
        Command::AnalyzeGmi(common) => {
            let config = load_config(&common)?;
            let mut manifest =
                Manifest::new(&common.out, "analyze-gmi", Some(&config), config.seed)?;
            manifest.write_json("config.json", &config)?;
            for analysis in run_gmi_analysis(&config)? {
                let tag = snr_tag(analysis.snr_db);
                analysis.write_curves(manifest.create(&format!("curves_{tag}.csv"))?)?;
                analysis.write_factors(manifest.create(&format!("factors_{tag}.csv"))?)?;
                manifest.write_json(&format!("analysis_{tag}.json"), &analysis)?;
            }
            Ok(manifest.finish()?)
        }
        Command::BuildLut(common) => {
            let config = load_config(&common)?;
            let mut manifest = Manifest::new(&common.out, "build-lut", Some(&config), config.seed)?;
            manifest.write_json("config.json", &config)?;
            for (snr_db, luts) in build_luts(&config)? {
                for (class, lut) in luts.iter().enumerate() {
                    let name = format!("lut_{}_class{class}.csv", snr_tag(snr_db));
                    lut.write_csv(manifest.create(&name)?)?;
                }
            }
            Ok(manifest.finish()?)
        }
        Command::Table1 { common, samples } => {
            if samples == 0 {
                bail!("--samples must be positive");
            }
            let seed = match (&common.config, common.seed) {
                (_, Some(seed)) => seed,
                (Some(_), None) => load_config(&common)?.seed,
                (None, None) => 1,
            };
            let table = run_table1(seed, samples)?;
            let mut manifest = Manifest::new(&common.out, "table1", None, seed)?;
            table.write_csv(manifest.create("table1.csv")?)?;
            manifest.write_json("table1.json", &table)?;
            Ok(manifest.finish()?)
        }
        Command::Fer(common) => {
            let config = load_config(&common)?;
            let result = run_fer_experiment(&config)?;
            let mut manifest = Manifest::new(&common.out, "fer", Some(&config), config.seed)?;
            result.write_csv(manifest.create("fer.csv")?)?;
            manifest.write_json("fer.json", &result)?;
            Ok(manifest.finish()?)
        }
        Command::SearchDemo { common, dump, mode } => {
            let config = load_config(&common)?;
            let mode = match mode {
                Some(Mode::OneLevel) => OnlineMode::OneLevel,
                Some(Mode::TwoLevel) => OnlineMode::TwoLevel,
                None if config.scaling == ScalingMode::Online2Level => OnlineMode::TwoLevel,
                None => OnlineMode::OneLevel,
            };
            let records = read_dump(&dump)?;
            let report = search_dump(records, mode, &config.search)?;
            let mut manifest =
                Manifest::new(&common.out, "search-demo", Some(&config), config.seed)?;
            manifest.write_json("factors.json", &report)?;
            Ok(manifest.finish()?)
        }
    }
}

fn read_dump(path: &Path) -> Result<Vec<bicm_gmi_lab::detector::LlrRecord>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_llr_dump(BufReader::new(file)).with_context(|| format!("reading {}", path.display()))
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(manifest) => {
            println!("{}", manifest.display());
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
