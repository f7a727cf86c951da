use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use conflictforge::pipeline::{self, AnalyzeTask, Overrides, Task, Workspace};

#[derive(Parser)]
#[command(name = "conflictforge", version, about = "Quantify and predict conflict in online discussions")]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Root against which relative input paths resolve [default: config
    /// `data_dir`, then $CONFLICTFORGE_DATA_DIR, then the config's folder].
    #[arg(long, global = true)]
    data_dir: Option<PathBuf>,
    /// Directory for every artifact.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Conflict threshold on the conflict factor.
    #[arg(long, global = true)]
    tau: Option<f64>,
    /// Rerun stages even if they are up to date.
    #[arg(long, global = true)]
    force: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum TaskArg {
    NewsRegress,
    PairSvm,
    PairGcn,
}

impl From<TaskArg> for Task {
    fn from(t: TaskArg) -> Task {
        match t {
            TaskArg::NewsRegress => Task::NewsRegress,
            TaskArg::PairSvm => Task::PairSvm,
            TaskArg::PairGcn => Task::PairGcn,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum AnalyzeArg {
    Sources,
    Depth,
    Clusters,
    States,
}

impl From<AnalyzeArg> for AnalyzeTask {
    fn from(t: AnalyzeArg) -> AnalyzeTask {
        match t {
            AnalyzeArg::Sources => AnalyzeTask::Sources,
            AnalyzeArg::Depth => AnalyzeTask::Depth,
            AnalyzeArg::Clusters => AnalyzeTask::Clusters,
            AnalyzeArg::States => AnalyzeTask::States,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Validate the corpus, export reply interactions and tag documents.
    Ingest,
    /// Select the target terms.
    Terms,
    /// Target-dependent sentiment vector of every document.
    Sentiment,
    /// Pairwise and per-article conflict scores plus the engagement graph.
    Conflict,
    /// Article, comment and user-pair features.
    Features,
    Train {
        #[arg(long, value_enum)]
        task: TaskArg,
    },
    /// Score the held-out items with a trained model.
    Predict {
        #[arg(long, value_enum)]
        task: TaskArg,
    },
    /// Metrics of stored predictions.
    Eval {
        #[arg(long, value_enum)]
        task: TaskArg,
    },
    /// Plot-data exports.
    Analyze {
        #[arg(long, value_enum)]
        task: AnalyzeArg,
    },
    /// Every stage in order.
    All,
}

fn run(cli: Cli) -> conflictforge::Result<()> {
    let ws = Workspace::open(&Overrides {
        config: cli.config,
        data_dir: cli.data_dir,
        out_dir: cli.out_dir,
        seed: cli.seed,
        tau: cli.tau,
        force: cli.force,
    })?;
    match cli.command {
        Command::Ingest => pipeline::ingest(&ws).map(drop),
        Command::Terms => pipeline::terms(&ws).map(drop),
        Command::Sentiment => pipeline::sentiment(&ws).map(drop),
        Command::Conflict => pipeline::conflict(&ws).map(drop),
        Command::Features => pipeline::features(&ws).map(drop),
        Command::Train { task } => pipeline::train(&ws, task.into()).map(drop),
        Command::Predict { task } => pipeline::predict(&ws, task.into()).map(drop),
        Command::Eval { task } => pipeline::eval(&ws, task.into()).map(drop),
        Command::Analyze { task } => pipeline::analyze(&ws, task.into()).map(drop),
        Command::All => pipeline::run_all(&ws),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_user_error() { 2 } else { 1 })
        }
    }
}
