//! skymine: mine normal-behavior temporal patterns from server metrics
//! and flag time periods where they go missing.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use skymine::mining::MiningMode;
use skymine_cli::pipeline::{
    cmd_abstract, cmd_detect, cmd_match, cmd_mine, cmd_run, cmd_train, parse_duration,
    MiningOverrides, Selection, FACTS_FILE,
};
use skymine_cli::CliError;

#[derive(Parser)]
#[command(
    name = "skymine",
    version,
    about = "Temporal-pattern mining and skyline anomaly detection for time-stamped metrics",
    after_help = "Exit codes: 0 success, 1 usage error, 2 data error, 3 config error."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Knowledge-base configuration file (TOML)
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Output directory
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    All,
    MostRecent,
    Latest,
}

impl From<ModeArg> for MiningMode {
    fn from(mode: ModeArg) -> Self {
        match mode {
            ModeArg::All => MiningMode::All,
            ModeArg::MostRecent => MiningMode::MostRecent,
            ModeArg::Latest => MiningMode::Latest,
        }
    }
}

#[derive(Args)]
struct MiningArgs {
    /// Instance-selection mode
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Maximum pattern window, e.g. 10h or 36000
    #[arg(long, value_name = "DUR", value_parser = parse_duration)]
    max_window: Option<i64>,
    /// Maximum gap the BEFORE relation bridges, e.g. 15m
    #[arg(long, value_name = "DUR", value_parser = parse_duration)]
    before_max_gap: Option<i64>,
    /// Require instances on at least this many distinct days per subject
    #[arg(long, value_name = "N")]
    coverage_days: Option<u32>,
    /// Require summed instance duration per subject, e.g. 1h
    #[arg(long, value_name = "DUR", value_parser = parse_duration, conflicts_with = "coverage_days")]
    min_coverage: Option<i64>,
    /// Minimum per-subject instance count
    #[arg(long, value_name = "N")]
    min_horizontal: Option<u32>,
}

impl MiningArgs {
    fn overrides(&self) -> MiningOverrides {
        MiningOverrides {
            mode: self.mode.map(Into::into),
            max_window_seconds: self.max_window,
            before_max_gap_seconds: self.before_max_gap,
            coverage_days: self.coverage_days,
            min_coverage_seconds: self.min_coverage,
            min_horizontal: self.min_horizontal,
        }
    }
}

#[derive(Args)]
struct SelectionArgs {
    /// Pattern sizes promoted into the library
    #[arg(long, value_delimiter = ',', default_values_t = [2, 3])]
    sizes: Vec<u32>,
    /// Keep only the k best-supported patterns
    #[arg(long, value_name = "K")]
    top_k: Option<usize>,
    /// Choose the library patterns interactively on stdin
    #[arg(long)]
    interactive: bool,
}

impl SelectionArgs {
    fn selection(&self) -> Selection {
        Selection {
            sizes: self.sizes.clone(),
            top_k: self.top_k,
            interactive: self.interactive,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Abstract raw CSV metrics into discretized symbolic facts
    Abstract {
        #[command(flatten)]
        common: CommonArgs,
        /// Raw sample CSV (subject_id,concept_id,timestamp,value)
        input: PathBuf,
        /// Keep only samples on UTC weekdays
        #[arg(long)]
        weekdays_only: bool,
    },
    /// Mine frequent temporal patterns from a fact file
    Mine {
        #[command(flatten)]
        common: CommonArgs,
        /// Fact file produced by `abstract`
        facts: PathBuf,
        #[command(flatten)]
        mining: MiningArgs,
        #[command(flatten)]
        selection: SelectionArgs,
    },
    /// Abstract, mine and select the normal-behavior library
    Train {
        #[command(flatten)]
        common: CommonArgs,
        /// Training CSV
        input: PathBuf,
        /// Keep only samples on UTC weekdays
        #[arg(long)]
        weekdays_only: bool,
        #[command(flatten)]
        mining: MiningArgs,
        #[command(flatten)]
        selection: SelectionArgs,
    },
    /// Find all library-pattern instances in a fact file
    Match {
        #[command(flatten)]
        common: CommonArgs,
        /// Pattern library produced by `train` or `mine`
        #[arg(long, value_name = "PATH")]
        library: PathBuf,
        /// Fact file produced by `abstract`
        facts: PathBuf,
        /// Matching mode (defaults to all)
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
    },
    /// Match the library on test data and report FEW periods
    Detect {
        #[command(flatten)]
        common: CommonArgs,
        /// Pattern library produced by `train` or `mine`
        #[arg(long, value_name = "PATH")]
        library: PathBuf,
        /// Test CSV
        input: PathBuf,
        /// Keep only samples on UTC weekdays
        #[arg(long)]
        weekdays_only: bool,
        /// Skyline bin width, e.g. 1h
        #[arg(long, value_name = "DUR", value_parser = parse_duration)]
        bin: Option<i64>,
        /// Matching mode (defaults to all)
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
    },
    /// Full pipeline: train on one CSV, detect on another
    Run {
        #[command(flatten)]
        common: CommonArgs,
        /// Training CSV
        train_csv: PathBuf,
        /// Test CSV
        test_csv: PathBuf,
        /// Keep only samples on UTC weekdays
        #[arg(long)]
        weekdays_only: bool,
        #[command(flatten)]
        mining: MiningArgs,
        #[command(flatten)]
        selection: SelectionArgs,
        /// Skyline bin width, e.g. 1h
        #[arg(long, value_name = "DUR", value_parser = parse_duration)]
        bin: Option<i64>,
        /// Matching mode for detection (defaults to all)
        #[arg(long = "match-mode", value_enum)]
        match_mode: Option<ModeArg>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Abstract {
            common,
            input,
            weekdays_only,
        } => {
            cmd_abstract(&common.config, &input, &common.out, weekdays_only, FACTS_FILE)?;
        }
        Command::Mine {
            common,
            facts,
            mining,
            selection,
        } => {
            cmd_mine(
                &common.config,
                &facts,
                &common.out,
                &mining.overrides(),
                &selection.selection(),
            )?;
        }
        Command::Train {
            common,
            input,
            weekdays_only,
            mining,
            selection,
        } => {
            cmd_train(
                &common.config,
                &input,
                &common.out,
                weekdays_only,
                &mining.overrides(),
                &selection.selection(),
            )?;
        }
        Command::Match {
            common,
            library,
            facts,
            mode,
        } => {
            cmd_match(
                &common.config,
                &library,
                &facts,
                &common.out,
                mode.map(Into::into),
            )?;
        }
        Command::Detect {
            common,
            library,
            input,
            weekdays_only,
            bin,
            mode,
        } => {
            cmd_detect(
                &common.config,
                &library,
                &input,
                &common.out,
                weekdays_only,
                bin,
                mode.map(Into::into),
            )?;
        }
        Command::Run {
            common,
            train_csv,
            test_csv,
            weekdays_only,
            mining,
            selection,
            bin,
            match_mode,
        } => {
            cmd_run(
                &common.config,
                &train_csv,
                &test_csv,
                &common.out,
                weekdays_only,
                &mining.overrides(),
                &selection.selection(),
                bin,
                match_mode.map(Into::into),
            )?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { 1 } else { 0 };
            err.print().expect("write clap error");
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
