use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "tablescene", version, about = "Build, render and score tabletop pick-and-place benchmark scenes")]
pub struct Cli {
    /// Manifest to update [default: manifest.json in the directory holding the output;
    /// for `pipeline`, inside its output directory]
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Resting orientations of one mesh
    StablePoses(StablePosesArgs),
    /// Tabletop cells where the arm reaches a stand-off pose
    Reachability(ReachabilityArgs),
    /// Candidate scenes on a reachability map
    Generate(GenerateArgs),
    /// Highest pose-entropy scene set under per-object count bounds
    Select(SelectArgs),
    /// Reference render and overlay bundle of one scene
    Render(RenderArgs),
    /// Grasp file utilities
    #[command(subcommand)]
    Grasps(GraspsCommand),
    /// Structural and grasp feasibility checks of one scene
    Validate(ValidateArgs),
    /// Evaluation metrics
    #[command(subcommand)]
    Metrics(MetricsCommand),
    /// Reachability, generation, selection and rendering in one run
    Pipeline(PipelineArgs),
    /// Rerun recorded stages and compare their outputs with the manifest
    Replay(ReplayArgs),
    /// HTTP asset service for the overlay tool
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ComSource {
    /// Uniform-density solid
    Uniform,
    /// Mean of the mesh vertices
    Vertices,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("source").required(true))]
pub struct StablePosesArgs {
    /// Wavefront OBJ mesh
    #[arg(long, group = "source")]
    pub mesh: Option<PathBuf>,
    /// Built-in catalog object id
    #[arg(long, group = "source")]
    pub object: Option<String>,
    #[arg(long, value_enum, default_value_t = ComSource::Uniform)]
    pub com: ComSource,
    /// Pose file to write [default: <mesh stem>.poses.json]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ReachArgs {
    #[arg(long, default_value_t = 16)]
    pub rows: usize,
    #[arg(long, default_value_t = 16)]
    pub cols: usize,
    /// Probe block side in metres
    #[arg(long, default_value_t = 0.03)]
    pub block_size: f64,
    /// Planning attempts per cell
    #[arg(long, default_value_t = 20)]
    pub iterations: u32,
    /// Shoulder position x,y,z of the analytic arm model
    #[arg(long, value_parser = parse_vec3, default_value = "0,0,0.895")]
    pub shoulder: [f64; 3],
    #[arg(long, default_value_t = 0.40)]
    pub r_min: f64,
    #[arg(long, default_value_t = 1.05)]
    pub r_max: f64,
    /// Stand-off height above the table
    #[arg(long, default_value_t = 0.15)]
    pub standoff: f64,
    /// Per-attempt planner success probability; below 1 the planner is randomised
    #[arg(long, default_value_t = 1.0)]
    pub planner_success: f64,
}

#[derive(Debug, Args)]
pub struct ReachabilityArgs {
    #[command(flatten)]
    pub reach: ReachArgs,
    /// Master seed; only used when --planner-success < 1
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SceneArgs {
    /// Largest distance from an earlier placement's cell
    #[arg(long, default_value_t = 0.25)]
    pub nearby_radius: f64,
    /// Clearance between object footprints
    #[arg(long, default_value_t = 0.005)]
    pub collision_margin: f64,
    /// Regeneration attempts per candidate until its grasps are feasible
    #[arg(long, default_value_t = 50)]
    pub max_attempts: usize,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Reachability map file
    #[arg(long)]
    pub map: PathBuf,
    /// Master seed
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 164)]
    pub count: usize,
    #[command(flatten)]
    pub scene: SceneArgs,
    /// Directory for the scene files and candidates.json
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SelectionArgs {
    /// Scenes per set
    #[arg(long, default_value_t = 20)]
    pub k: usize,
    #[arg(long, default_value_t = 5)]
    pub count_min: usize,
    #[arg(long, default_value_t = 7)]
    pub count_max: usize,
    /// Sets to sample when exhaustive enumeration is too large
    #[arg(long, default_value_t = 100_000)]
    pub num_sets: usize,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    /// Directory of candidate scenes written by `generate`
    #[arg(long)]
    pub scenes: PathBuf,
    /// Master seed
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub selection: SelectionArgs,
    /// Scene set file
    #[arg(long)]
    pub out: PathBuf,
    /// Also copy the chosen scene files here
    #[arg(long)]
    pub selected: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RenderOpts {
    /// Multiplies resolution and focal lengths
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
    #[arg(long)]
    pub no_table: bool,
    #[arg(long, default_value_t = 16)]
    pub bands: usize,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    #[arg(long)]
    pub scene: PathBuf,
    #[command(flatten)]
    pub opts: RenderOpts,
    /// Bundle directory
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GripperArgs {
    #[arg(long, default_value_t = 0.10)]
    pub max_opening: f64,
    #[arg(long, default_value_t = 0.008)]
    pub finger_clearance: f64,
    #[arg(long, default_value_t = 0.10)]
    pub grasp_standoff: f64,
}

#[derive(Debug, Subcommand)]
pub enum GraspsCommand {
    /// Check a grasp file and summarise it
    Load {
        #[arg(long)]
        file: PathBuf,
        #[command(flatten)]
        gripper: GripperArgs,
    },
    /// Farthest-point subset of a grasp file
    Downsample {
        #[arg(long)]
        file: PathBuf,
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        gripper: GripperArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Straight-down grasp for a base-frame point cloud
    TopDown {
        /// Text file with one `x y z` per line, or an OBJ whose vertices are used
        #[arg(long)]
        cloud: PathBuf,
        #[arg(long, default_value = "cloud")]
        object_id: String,
        #[command(flatten)]
        gripper: GripperArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Grasps for a catalog object
    Synthesize {
        #[arg(long)]
        object: String,
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[command(flatten)]
        gripper: GripperArgs,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub scene: PathBuf,
    /// Reachability map [default: computed with the default arm model]
    #[arg(long)]
    pub map: Option<PathBuf>,
    #[arg(long, default_value_t = 0.005)]
    pub collision_margin: f64,
}

#[derive(Debug, Subcommand)]
pub enum MetricsCommand {
    /// ADD-S (and ADD) between two poses of one object
    AddS {
        /// Estimated pose file
        #[arg(long)]
        est: PathBuf,
        /// Ground-truth pose file
        #[arg(long)]
        gt: PathBuf,
        /// Catalog object id
        #[arg(long, conflicts_with = "mesh", required_unless_present = "mesh")]
        object: Option<String>,
        #[arg(long)]
        mesh: Option<PathBuf>,
        #[arg(long, default_value_t = tablescene::metrics::MODEL_POINTS)]
        points: usize,
    },
    /// Overlap and boundary P/R/F of instance images, averaged over pairs
    Segmentation {
        /// Predicted 16-bit instance PNG; repeat once per image
        #[arg(long, required = true)]
        pred: Vec<PathBuf>,
        /// Ground-truth instance PNG, paired with --pred in order
        #[arg(long, required = true)]
        gt: Vec<PathBuf>,
        /// Boundary match tolerance in pixels
        #[arg(long, default_value_t = 2)]
        tolerance: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Outcome tables from a trial log
    Aggregate {
        #[arg(long)]
        log: PathBuf,
        /// Per-object outcome CSV
        #[arg(long)]
        per_object: Option<PathBuf>,
        /// Per-method success CSV
        #[arg(long)]
        summary: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 164)]
    pub candidates: usize,
    #[command(flatten)]
    pub reach: ReachArgs,
    #[command(flatten)]
    pub scene: SceneArgs,
    #[command(flatten)]
    pub selection: SelectionArgs,
    #[command(flatten)]
    pub render: RenderOpts,
    /// Skip the reference renders
    #[arg(long)]
    pub no_render: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    /// Manifest to replay
    #[arg(long = "from")]
    pub from: PathBuf,
    /// Stage key; all stages when omitted
    #[arg(long)]
    pub stage: Option<String>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Pipeline output directory
    #[arg(long)]
    pub dir: PathBuf,
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub addr: String,
    /// Where confirmations are appended [default: <dir>/trial_log.jsonl]
    #[arg(long)]
    pub trial_log: Option<PathBuf>,
}

fn parse_vec3(s: &str) -> Result<[f64; 3], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(format!("expected x,y,z, got {s:?}"));
    }
    let mut out = [0.0; 3];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = p.parse().map_err(|e| format!("{p:?}: {e}"))?;
    }
    Ok(out)
}
