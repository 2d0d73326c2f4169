//! Command-line and config-file parsing into a validated [`RunConfig`].

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use esqpt::analysis::{FitWindow, DEFAULT_DXI};
use esqpt::models::{Block, Family, HalfInt, ModelSpec, Phase};
use esqpt::semiclassics::{Branch, Counting};

use crate::error::CliError;
use crate::grid::{parse_count, parse_count_grid, parse_int, parse_int_grid, parse_number, parse_real_grid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, ValueEnum)]
pub enum CommandName {
    Spectrum,
    Scan,
    Gap,
    OrderParam,
    Critical,
    FitAlpha,
    Scaling,
    Wavefunction,
    Degeneracy,
    WkbContour,
    Action,
    LambertW,
}

impl CommandName {
    pub const ALL: [CommandName; 12] = [
        CommandName::Spectrum,
        CommandName::Scan,
        CommandName::Gap,
        CommandName::OrderParam,
        CommandName::Critical,
        CommandName::FitAlpha,
        CommandName::Scaling,
        CommandName::Wavefunction,
        CommandName::Degeneracy,
        CommandName::WkbContour,
        CommandName::Action,
        CommandName::LambertW,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CommandName::Spectrum => "spectrum",
            CommandName::Scan => "scan",
            CommandName::Gap => "gap",
            CommandName::OrderParam => "order-param",
            CommandName::Critical => "critical",
            CommandName::FitAlpha => "fit-alpha",
            CommandName::Scaling => "scaling",
            CommandName::Wavefunction => "wavefunction",
            CommandName::Degeneracy => "degeneracy",
            CommandName::WkbContour => "wkb-contour",
            CommandName::Action => "action",
            CommandName::LambertW => "lambert-w",
        }
    }

    /// Option keys the command accepts, from flags or a config file.
    fn keys(self) -> &'static [&'static str] {
        use CommandName::*;
        match self {
            Spectrum | Scan | Gap | Critical => &["blocks"],
            OrderParam => &["dxi"],
            FitAlpha => &["window-min", "window-max", "per-side", "joint"],
            Scaling => &["dk", "alpha", "window-min", "window-max"],
            Wavefunction => &["levels"],
            Degeneracy => &["blocks", "width"],
            WkbContour => &["levels", "counting"],
            Action => &["energy", "counting"],
            LambertW => &["branch", "from", "to", "points", "spacing"],
        }
    }

    fn needs_model(self) -> bool {
        self != CommandName::LambertW
    }
}

impl fmt::Display for CommandName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

const MODEL_KEYS: [&str; 9] = ["model", "N", "xi", "l", "g", "v", "omega", "multipole", "phase"];
const OUTPUT_KEYS: [&str; 3] = ["out", "format", "shift"];

#[derive(Debug, Parser)]
#[command(
    name = "esqpt-lab",
    version,
    about = "Exact spectra, excited-state transition observables and semiclassics of two-level models",
    after_help = "Grids: --xi takes x, a,b,c or start:stop:step; --N also takes the decade form 1e2:1e6.\n\
                  A config file holds key=value lines using the long flag names; flags override it.\n\
                  ESQPT_THREADS caps the worker count."
)]
pub struct Cli {
    #[arg(value_enum)]
    pub command: CommandName,
    /// Run the command's built-in checks instead of computing a table.
    #[arg(long)]
    pub selftest: bool,
    /// Flat key=value file supplying defaults for any long flag.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// lipkin, vibron-u3, sb, bosonic-pairing or fermionic-pairing.
    #[arg(long)]
    pub model: Option<String>,
    /// Particle number grid.
    #[arg(long = "N")]
    pub n: Option<String>,
    /// Control parameter grid in [0, 1].
    #[arg(long)]
    pub xi: Option<String>,
    /// Vibron angular momentum.
    #[arg(long, allow_hyphen_values = true)]
    pub l: Option<String>,
    /// Lipkin grading, 0 or 1.
    #[arg(long)]
    pub g: Option<String>,
    /// Seniority: `v` for the s-b model, `v1,v2` for pairing models.
    #[arg(long)]
    pub v: Option<String>,
    /// Pair degeneracies `Omega1,Omega2` of a pairing model.
    #[arg(long)]
    pub omega: Option<String>,
    /// Multipolarity L of the s-b model's b level.
    #[arg(long)]
    pub multipole: Option<String>,
    /// Relative sign of the two pair operators: plus or minus.
    #[arg(long)]
    pub phase: Option<String>,
    /// Diagonal shift term: on or off.
    #[arg(long)]
    pub shift: Option<String>,
    /// Several blocks at once: l or g values, s-b seniorities, or v1/v2 pairs.
    #[arg(long, allow_hyphen_values = true)]
    pub blocks: Option<String>,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<String>,
    /// csv or json.
    #[arg(long)]
    pub format: Option<String>,
    /// Step for xi derivatives.
    #[arg(long)]
    pub dxi: Option<String>,
    /// Offset k - k_c at which scaling gaps are read.
    #[arg(long)]
    pub dk: Option<String>,
    /// Scaling alpha: fit (per point), gap (matched per symmetric pair) or a number.
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<String>,
    #[arg(long = "window-min")]
    pub window_min: Option<String>,
    #[arg(long = "window-max")]
    pub window_max: Option<String>,
    /// Fit separate constants on each side of k_c.
    #[arg(long = "per-side", num_args = 0..=1, default_missing_value = "true")]
    pub per_side: Option<String>,
    /// Fit k_c jointly with the constants.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub joint: Option<String>,
    /// Absolute cluster width for degeneracy grouping.
    #[arg(long)]
    pub width: Option<String>,
    /// Level indices.
    #[arg(long)]
    pub levels: Option<String>,
    /// Semiclassical level counting: single or all parities.
    #[arg(long)]
    pub counting: Option<String>,
    /// Energy grid for the action table.
    #[arg(long, allow_hyphen_values = true)]
    pub energy: Option<String>,
    /// Lambert W branch: 0 or -1.
    #[arg(long, allow_hyphen_values = true)]
    pub branch: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub from: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub to: Option<String>,
    #[arg(long)]
    pub points: Option<String>,
    /// Lambert W argument spacing: linear or log.
    #[arg(long)]
    pub spacing: Option<String>,
}

impl Cli {
    fn flag_values(&self) -> Vec<(&'static str, &String)> {
        let all = [
            ("model", &self.model),
            ("N", &self.n),
            ("xi", &self.xi),
            ("l", &self.l),
            ("g", &self.g),
            ("v", &self.v),
            ("omega", &self.omega),
            ("multipole", &self.multipole),
            ("phase", &self.phase),
            ("shift", &self.shift),
            ("blocks", &self.blocks),
            ("out", &self.out),
            ("format", &self.format),
            ("dxi", &self.dxi),
            ("dk", &self.dk),
            ("alpha", &self.alpha),
            ("window-min", &self.window_min),
            ("window-max", &self.window_max),
            ("per-side", &self.per_side),
            ("joint", &self.joint),
            ("width", &self.width),
            ("levels", &self.levels),
            ("counting", &self.counting),
            ("energy", &self.energy),
            ("branch", &self.branch),
            ("from", &self.from),
            ("to", &self.to),
            ("points", &self.points),
            ("spacing", &self.spacing),
        ];
        all.into_iter().filter_map(|(k, v)| v.as_ref().map(|v| (k, v))).collect()
    }
}

fn is_known_key(key: &str) -> bool {
    MODEL_KEYS.contains(&key)
        || OUTPUT_KEYS.contains(&key)
        || CommandName::ALL.iter().any(|c| c.keys().contains(&key))
}

/// Reads `key = value` lines; `#` starts a comment line.
pub fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| CliError::Io { path: path.display().to_string(), source })?;
    parse_config_text(&text, &path.display().to_string())
}

pub fn parse_config_text(text: &str, origin: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("{origin}:{}: expected key=value, got '{line}'", i + 1)))?;
        let (key, value) = (key.trim(), value.trim());
        if !is_known_key(key) {
            return Err(CliError::Config(format!("{origin}:{}: unknown key '{key}'", i + 1)));
        }
        if map.insert(key.to_string(), value.to_string()).is_some() {
            return Err(CliError::Config(format!("{origin}:{}: key '{key}' given twice", i + 1)));
        }
    }
    Ok(map)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlphaMode {
    /// Per-point fit of the level energies.
    Fit,
    /// One value per symmetric pair matched to the measured gaps.
    GapMatched,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spacing {
    Linear,
    Log,
}

/// Model part of a run: one template and the grids it is swept over.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    /// Spec at the first grid point.
    pub template: ModelSpec,
    pub n_set: Vec<u32>,
    pub xi_set: Vec<f64>,
    pub blocks: Vec<Block>,
}

impl ModelConfig {
    pub fn spec(&self, n: u32, xi: f64, block: Block) -> ModelSpec {
        self.template.with_particles(n).with_xi(xi).with_block(block)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Options {
    pub dxi: f64,
    pub dk: f64,
    pub alpha: AlphaMode,
    pub window: FitWindow,
    pub width: Option<f64>,
    pub levels: Option<Vec<usize>>,
    pub counting: Counting,
    pub energy: Vec<f64>,
    pub branch: Branch,
    pub from: f64,
    pub to: f64,
    pub points: usize,
    pub spacing: Spacing,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            dxi: DEFAULT_DXI,
            dk: 5.0,
            alpha: AlphaMode::Fit,
            window: FitWindow::default(),
            width: None,
            levels: None,
            counting: Counting::SingleParity,
            energy: Vec::new(),
            branch: Branch::Principal,
            from: 0.0,
            to: 0.0,
            points: 0,
            spacing: Spacing::Linear,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: CommandName,
    pub selftest: bool,
    pub model: Option<ModelConfig>,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub options: Options,
}

/// Parses `argv` (including the program name) and any `--config` file.
pub fn parse_config<I, T>(argv: I) -> Result<RunConfig, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(|e| CliError::Config(e.to_string()))?;
    resolve(&cli)
}

/// Merges config-file values under the flags and validates the result.
pub fn resolve(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut values = match &cli.config {
        Some(path) => read_config_file(path)?,
        None => BTreeMap::new(),
    };
    for (key, value) in cli.flag_values() {
        values.insert(key.to_string(), value.clone());
    }
    if cli.selftest {
        return Ok(RunConfig {
            command: cli.command,
            selftest: true,
            model: None,
            out: None,
            format: Format::Csv,
            options: Options::default(),
        });
    }
    build(cli.command, &values)
}

fn get<'a>(values: &'a BTreeMap<String, String>, key: &str) -> Option<&'a str> {
    values.get(key).map(String::as_str)
}

fn parse_bool(key: &str, text: &str) -> Result<bool, CliError> {
    match text {
        "true" | "on" | "yes" | "1" => Ok(true),
        "false" | "off" | "no" | "0" => Ok(false),
        _ => Err(CliError::Config(format!("--{key}: expected on/off, got '{text}'"))),
    }
}

pub fn build(command: CommandName, values: &BTreeMap<String, String>) -> Result<RunConfig, CliError> {
    for key in values.keys() {
        let allowed = command.keys().contains(&key.as_str())
            || ["out", "format"].contains(&key.as_str())
            || (command.needs_model() && (MODEL_KEYS.contains(&key.as_str()) || key == "shift"));
        if !allowed {
            return Err(CliError::Config(format!("option --{key} does not apply to the {command} command")));
        }
    }
    let format = match get(values, "format").unwrap_or("csv") {
        "csv" => Format::Csv,
        "json" => Format::Json,
        other => return Err(CliError::Config(format!("--format: expected csv or json, got '{other}'"))),
    };
    let out = get(values, "out").map(PathBuf::from);
    if let Some(path) = &out {
        check_writable(path)?;
    }
    let model = if command.needs_model() { Some(model_config(values)?) } else { None };
    let options = options(command, values)?;
    Ok(RunConfig { command, selftest: false, model, out, format, options })
}

fn check_writable(path: &Path) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    if !dir.is_dir() {
        return Err(CliError::Config(format!("--out: directory '{}' does not exist", dir.display())));
    }
    if path.is_dir() {
        return Err(CliError::Config(format!("--out: '{}' is a directory", path.display())));
    }
    Ok(())
}

fn half_int(key: &str, text: &str) -> Result<HalfInt, CliError> {
    HalfInt::from_f64(parse_number(key, text)?)
        .map_err(|_| CliError::Config(format!("--{key}: '{text}' is not a positive half-integer")))
}

fn pair<'a>(key: &str, text: &'a str) -> Result<(&'a str, &'a str), CliError> {
    match text.split_once(',') {
        Some((a, b)) if !b.contains(',') => Ok((a.trim(), b.trim())),
        _ => Err(CliError::Config(format!("--{key}: expected two comma-separated values, got '{text}'"))),
    }
}

fn model_config(values: &BTreeMap<String, String>) -> Result<ModelConfig, CliError> {
    let name = get(values, "model").ok_or_else(|| CliError::Config("--model is required".into()))?;
    let n_set = parse_count_grid("N", get(values, "N").ok_or_else(|| CliError::Config("--N is required".into()))?)?;
    let xi_set = parse_real_grid("xi", get(values, "xi").ok_or_else(|| CliError::Config("--xi is required".into()))?)?;
    if let Some(bad) = xi_set.iter().find(|x| !(0.0..=1.0).contains(*x)) {
        return Err(CliError::Config(format!("--xi: {bad} is outside the allowed range [0, 1]")));
    }
    if n_set.contains(&0) {
        return Err(CliError::Config("--N: particle numbers must be at least 1".into()));
    }
    let (n0, xi0) = (n_set[0], xi_set[0]);
    let reject = |keys: &[&str], hint: &str| -> Result<(), CliError> {
        for key in keys {
            if values.contains_key(*key) {
                return Err(CliError::Config(format!(
                    "contradictory options: --{key} does not apply to the {name} model{hint}"
                )));
            }
        }
        Ok(())
    };
    let block_key = match name {
        "lipkin" => "g",
        "vibron-u3" | "vibron" => "l",
        _ => "v",
    };
    if values.contains_key("blocks") && values.contains_key(block_key) {
        return Err(CliError::Config(format!("contradictory options: --blocks and --{block_key} both select blocks")));
    }
    let (template, parse_block): (ModelSpec, Box<dyn Fn(&str) -> Result<Block, CliError>>) = match name {
        "lipkin" => {
            reject(&["l", "v", "omega", "multipole"], " (its block label is --g)")?;
            let grading = |t: &str| -> Result<Block, CliError> {
                match parse_count("g", t)? {
                    g @ (0 | 1) => Ok(Block::Grading(g as u8)),
                    g => Err(CliError::Config(format!("--g: grading must be 0 or 1, got {g}"))),
                }
            };
            (ModelSpec::lipkin(n0, 0, xi0), Box::new(grading))
        }
        "vibron-u3" | "vibron" => {
            reject(&["g", "v", "omega", "multipole"], " (its block label is --l)")?;
            (ModelSpec::vibron(n0, 0, xi0), Box::new(|t: &str| Ok(Block::AngularMomentum(parse_int("l", t)?))))
        }
        "sb" => {
            reject(&["l", "g", "omega"], " (its block label is --v)")?;
            let big_l = parse_count(
                "multipole",
                get(values, "multipole").ok_or_else(|| CliError::Config("--multipole is required for the sb model".into()))?,
            )?;
            (
                ModelSpec::sb(big_l, n0, 0, xi0),
                Box::new(|t: &str| Ok(Block::Seniority { v1: 0, v2: parse_count("v", t)? })),
            )
        }
        "bosonic-pairing" | "fermionic-pairing" => {
            reject(&["l", "g", "multipole"], " (its block label is --v v1,v2)")?;
            let text = get(values, "omega")
                .ok_or_else(|| CliError::Config(format!("--omega Omega1,Omega2 is required for the {name} model")))?;
            let (a, b) = pair("omega", text)?;
            let (o1, o2) = (half_int("omega", a)?, half_int("omega", b)?);
            let spec = if name == "bosonic-pairing" {
                ModelSpec::bosonic_pairing(o1, o2, n0, 0, 0, xi0)
            } else {
                ModelSpec::fermionic_pairing(o1, o2, n0, 0, 0, xi0)
            };
            let seniority = |t: &str| -> Result<Block, CliError> {
                let (a, b) = t
                    .split_once(['/', ','])
                    .ok_or_else(|| CliError::Config(format!("--v: expected v1,v2 (or v1/v2 in --blocks), got '{t}'")))?;
                Ok(Block::Seniority { v1: parse_count("v", a)?, v2: parse_count("v", b)? })
            };
            (spec, Box::new(seniority))
        }
        other => {
            return Err(CliError::Config(format!(
                "--model: unknown model '{other}' (expected lipkin, vibron-u3, sb, bosonic-pairing or fermionic-pairing)"
            )))
        }
    };
    let pairs = block_key == "v" && template.family != Family::SbGeneral;
    let blocks = match (get(values, "blocks"), get(values, block_key)) {
        (Some(list), _) if pairs => list.split(',').map(|t| parse_block(t.trim())).collect::<Result<Vec<_>, _>>()?,
        (Some(list), _) => parse_int_grid("blocks", list)?
            .iter()
            .map(|i| parse_block(&i.to_string()))
            .collect::<Result<Vec<_>, _>>()?,
        (None, Some(one)) => vec![parse_block(one)?],
        (None, None) => vec![template.block],
    };
    finish_blocks(template, n_set, xi_set, values, blocks)
}

fn finish_blocks(
    mut template: ModelSpec,
    n_set: Vec<u32>,
    xi_set: Vec<f64>,
    values: &BTreeMap<String, String>,
    blocks: Vec<Block>,
) -> Result<ModelConfig, CliError> {
    if blocks.is_empty() {
        return Err(CliError::Config("--blocks: no blocks given".into()));
    }
    if let Some(p) = get(values, "phase") {
        template = template.with_phase(match p {
            "plus" | "+" => Phase::Plus,
            "minus" | "-" => Phase::Minus,
            other => return Err(CliError::Config(format!("--phase: expected plus or minus, got '{other}'"))),
        });
    }
    if let Some(s) = get(values, "shift") {
        template = template.with_shift(parse_bool("shift", s)?);
    }
    template = template.with_block(blocks[0]);
    let config = ModelConfig { template, n_set, xi_set, blocks };
    for &n in &config.n_set {
        for &b in &config.blocks {
            config.spec(n, config.xi_set[0], b).validate()?;
        }
    }
    Ok(config)
}

fn options(command: CommandName, values: &BTreeMap<String, String>) -> Result<Options, CliError> {
    let mut o = Options::default();
    let number = |key: &str| -> Result<Option<f64>, CliError> { get(values, key).map(|t| parse_number(key, t)).transpose() };
    if let Some(d) = number("dxi")? {
        if !(d > 0.0 && d < 0.05) {
            return Err(CliError::Config(format!("--dxi: {d} must lie in (0, 0.05)")));
        }
        o.dxi = d;
    }
    if let Some(d) = number("dk")? {
        if !(d >= 1.0) {
            return Err(CliError::Config(format!("--dk: {d} must be at least 1")));
        }
        o.dk = d;
    }
    o.alpha = match get(values, "alpha") {
        None | Some("fit") => AlphaMode::Fit,
        Some("gap") => AlphaMode::GapMatched,
        Some(t) => AlphaMode::Fixed(parse_number("alpha", t)?),
    };
    if command == CommandName::Scaling {
        o.window = FitWindow { min_offset: 5.0, max_offset: Some(20.0), per_side: false, joint: false };
    }
    if let Some(w) = number("window-min")? {
        o.window.min_offset = w;
    }
    if let Some(w) = number("window-max")? {
        o.window.max_offset = Some(w);
    }
    if let Some(t) = get(values, "per-side") {
        o.window.per_side = parse_bool("per-side", t)?;
    }
    if let Some(t) = get(values, "joint") {
        o.window.joint = parse_bool("joint", t)?;
    }
    if o.window.min_offset < 0.0 || o.window.max_offset.is_some_and(|m| m <= o.window.min_offset) {
        return Err(CliError::Config("--window-min/--window-max: need 0 <= min < max".into()));
    }
    if let Some(w) = number("width")? {
        if !(w > 0.0) {
            return Err(CliError::Config(format!("--width: {w} must be positive")));
        }
        o.width = Some(w);
    }
    if let Some(t) = get(values, "levels") {
        let levels = parse_int_grid("levels", t)?;
        if levels.iter().any(|&k| k < 0) {
            return Err(CliError::Config("--levels: indices must be nonnegative".into()));
        }
        o.levels = Some(levels.into_iter().map(|k| k as usize).collect());
    }
    if command == CommandName::WkbContour && o.levels.is_none() {
        return Err(CliError::Config("--levels is required for wkb-contour".into()));
    }
    if let Some(t) = get(values, "counting") {
        o.counting = match t {
            "single" => Counting::SingleParity,
            "all" => Counting::AllParities,
            other => return Err(CliError::Config(format!("--counting: expected single or all, got '{other}'"))),
        };
    }
    if command == CommandName::Action {
        let text = get(values, "energy").ok_or_else(|| CliError::Config("--energy is required for action".into()))?;
        o.energy = parse_real_grid("energy", text)?;
    }
    if command == CommandName::LambertW {
        o.branch = match get(values, "branch").unwrap_or("0") {
            "0" | "principal" => Branch::Principal,
            "-1" | "minus-one" => Branch::MinusOne,
            other => return Err(CliError::Config(format!("--branch: expected 0 or -1, got '{other}'"))),
        };
        let need = |key: &str| number(key)?.ok_or_else(|| CliError::Config(format!("--{key} is required for lambert-w")));
        o.from = need("from")?;
        o.to = need("to")?;
        o.points = parse_count("points", get(values, "points").unwrap_or("100"))? as usize;
        if o.points == 0 || (o.points == 1 && o.from != o.to) {
            return Err(CliError::Config("--points: need at least 2 points for a nondegenerate range".into()));
        }
        o.spacing = match get(values, "spacing").unwrap_or("linear") {
            "linear" => Spacing::Linear,
            "log" => Spacing::Log,
            other => return Err(CliError::Config(format!("--spacing: expected linear or log, got '{other}'"))),
        };
        if o.spacing == Spacing::Log && !(o.from * o.to > 0.0) {
            return Err(CliError::Config("--spacing log: endpoints must be nonzero with the same sign".into()));
        }
    }
    Ok(o)
}
