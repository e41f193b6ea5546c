use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod cmd;

#[derive(Parser, Debug)]
#[command(name = "aisette", version, about = "Check, validate, run and serve aisette modules")]
pub struct Cli {
    /// SMT solver executable.
    #[arg(long, global = true, env = "AISETTE_SOLVER", default_value = "z3")]
    pub solver: String,

    /// Per-query solver timeout in milliseconds.
    #[arg(long, global = true, default_value_t = 10_000)]
    pub timeout: u64,

    /// Unrolling bounds for strings, lists and the event log.
    #[arg(long, global = true, value_enum, default_value_t = BoundsProfile::Default)]
    pub bounds: BoundsProfile,

    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BoundsProfile {
    Small,
    Default,
    Large,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Form {
    Verbose,
    Minimal,
    Json,
    Redacted,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Parse and typecheck source files.
    Check {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
    },
    /// Validate every chktest with the solver.
    Test {
        module: PathBuf,
        /// Only chktests whose name contains this text.
        #[arg(long)]
        filter: Option<String>,
    },
    /// Run a function, action or api.
    Run(RunArgs),
    /// Convert one value between wire forms (stdin to stdout).
    Encode {
        module: PathBuf,
        #[arg(value_name = "TYPE")]
        type_name: String,
        #[arg(long, value_enum, default_value_t = Form::Json)]
        from: Form,
        #[arg(long, value_enum, default_value_t = Form::Minimal)]
        to: Form,
    },
    /// Decode and validate one value (stdin), printing it in verbose form.
    Decode {
        module: PathBuf,
        #[arg(value_name = "TYPE")]
        type_name: String,
        #[arg(long, value_enum, default_value_t = Form::Verbose)]
        form: Form,
    },
    /// Report routes that expose sensitive data.
    Lint(ServeArgs),
    /// Check the requires clauses of an api at its call site in a partial action.
    Introspect {
        module: PathBuf,
        /// Source prefix ending at (or after) the api call.
        prefix: PathBuf,
        api: String,
        /// Action holding the call; defaults to the last one in the prefix.
        #[arg(long)]
        action: Option<String>,
        /// Known event, as a BAPI verbose entity literal.
        #[arg(long = "fact")]
        facts: Vec<String>,
    },
    /// Start the HTTP runtime.
    Serve(ServeArgs),
}

#[derive(Args, Debug)]
pub struct RunArgs {
    pub module: PathBuf,
    pub task: String,
    /// Arguments as BAPI verbose literals.
    #[arg(allow_negative_numbers = true)]
    pub args: Vec<String>,
    /// Env binding `NAME=LITERAL`.
    #[arg(long = "env", value_name = "NAME=LITERAL")]
    pub env: Vec<String>,
    /// Scripted agent table (`input TAB prompt TAB response` per line).
    #[arg(long)]
    pub stub: Option<PathBuf>,
    /// Directory of hole example files.
    #[arg(long)]
    pub examples: Option<PathBuf>,
    /// File of prior events, one verbose entity literal per line.
    #[arg(long)]
    pub events: Option<PathBuf>,
    /// Leave holes without examples unfilled instead of asking on stdin.
    #[arg(long)]
    pub no_prompt: bool,
    /// Form of the printed result.
    #[arg(long, value_enum, default_value_t = Form::Verbose)]
    pub form: Form,
}

#[derive(Args, Debug)]
pub struct ServeArgs {
    #[arg(long, env = "MINT_CONFIG")]
    pub config: PathBuf,
    /// Module source; overrides the config's `module`.
    #[arg(long)]
    pub module: Option<PathBuf>,
    /// Overrides the config's listen address.
    #[arg(long)]
    pub listen: Option<String>,
    /// Start even when the sensitivity lint reports errors.
    #[arg(long)]
    pub allow_lint_warnings: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    ExitCode::from(cmd::run(cli))
}
