use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use extrans_core::report::{self, Command, ModelSelector, ReportDocument, RunConfig};
use extrans_core::series::HalfInt;

/// Directory used for reports when `--json` is not given.
const OUT_DIR_ENV: &str = "EXTRANS_OUT_DIR";

#[derive(Parser)]
#[command(name = "extrans", version, about = "Exact verification of degree-4 extremal transitions")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check annihilation, rank, monodromy and the limit identity.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Truncation order in total degree.
        #[arg(long, default_value_t = 6)]
        order: u32,
        /// Lowest exponent kept in series windows.
        #[arg(long, default_value_t = -4, allow_hyphen_values = true)]
        floor: i64,
        /// Include the printed-formula ledger in the report.
        #[arg(long)]
        emit_ledger: bool,
    },
    /// Genus-zero instanton numbers of the Calabi-Yau models.
    Instantons {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 3)]
        max_degree: u32,
    },
}

#[derive(Args)]
struct Common {
    /// local, t24, t33 or all.
    #[arg(long, default_value = "all")]
    model: String,
    /// Report path; defaults to a file under $EXTRANS_OUT_DIR, else stdout.
    #[arg(long)]
    json: Option<PathBuf>,
}

fn output_path(common: &Common, config: &RunConfig) -> Option<PathBuf> {
    common.json.clone().or_else(|| {
        std::env::var_os(OUT_DIR_ENV).map(|dir| PathBuf::from(dir).join(format!("{}-{}.json", config.command.name(), config.model)))
    })
}

fn emit(doc: &ReportDocument, path: Option<PathBuf>) -> Result<(), String> {
    match path {
        Some(p) => fs::write(&p, doc.to_json()).map_err(|e| format!("cannot write {}: {e}", p.display())),
        None => {
            print!("{}", doc.to_json());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (common, config) = match cli.command {
        Cmd::Verify { common, order, floor, emit_ledger } => {
            let mut c = RunConfig::new(Command::Verify, ModelSelector::All);
            c.order = order;
            c.floor = HalfInt::int(floor);
            c.emit_ledger = emit_ledger;
            (common, c)
        }
        Cmd::Instantons { common, max_degree } => {
            let mut c = RunConfig::new(Command::Instantons, ModelSelector::All);
            c.max_degree = max_degree;
            (common, c)
        }
    };
    let config = match common.model.parse::<ModelSelector>() {
        Ok(model) => RunConfig { model, ..config },
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let result = report::run(&config);
    let code = report::exit_code(&result);
    match &result {
        Ok(doc) => {
            if let Err(e) = emit(doc, output_path(&common, &config)) {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
            for f in doc.failures() {
                eprintln!("FAIL {f}");
            }
        }
        Err(e) => eprintln!("error: {e}"),
    }
    ExitCode::from(code as u8)
}
