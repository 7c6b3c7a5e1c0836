//! Command-line parsing for `afsa-sim`.

use std::path::PathBuf;
use std::str::FromStr;

use clap::{Parser, ValueEnum};

use crate::config::ExperimentConfig;
use crate::model::{Protocol, SeqBits, TimingModel};
use crate::report::ReportFormat;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ProtocolArg {
    Afsa,
    Fsa,
    Edfsa,
}

impl From<ProtocolArg> for Protocol {
    fn from(p: ProtocolArg) -> Self {
        match p {
            ProtocolArg::Afsa => Protocol::Afsa,
            ProtocolArg::Fsa => Protocol::Fsa,
            ProtocolArg::Edfsa => Protocol::Edfsa,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

/// Parameters a sweep can vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    Tags,
    Frame,
    SeqBits,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Tags => "tags",
            SweepParam::Frame => "frame",
            SweepParam::SeqBits => "seq-bits",
        }
    }

    fn apply(self, config: &mut ExperimentConfig, value: u32) {
        match self {
            SweepParam::Tags => config.k_initial = value,
            SweepParam::Frame => config.frame_slots = value,
            SweepParam::SeqBits => config.seq_bits = SeqBits::Fixed(value.min(u32::from(u8::MAX)) as u8),
        }
    }
}

/// `<param>=<start:step:end>`, end inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SweepSpec {
    pub param: SweepParam,
    pub start: u32,
    pub step: u32,
    pub end: u32,
}

impl SweepSpec {
    pub fn values(&self) -> impl Iterator<Item = u32> {
        (self.start..=self.end).step_by(self.step as usize)
    }
}

impl FromStr for SweepSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        const FORM: &str = "expected <tags|frame|seq-bits>=<start:step:end>";
        let (name, range) = s.split_once('=').ok_or(FORM)?;
        let param = match name {
            "tags" => SweepParam::Tags,
            "frame" => SweepParam::Frame,
            "seq-bits" => SweepParam::SeqBits,
            _ => return Err(format!("unknown sweep parameter '{name}'; {FORM}")),
        };
        let parts: Vec<&str> = range.split(':').collect();
        let [start, step, end] = parts[..] else {
            return Err(FORM.to_string());
        };
        let num = |v: &str| v.parse::<u32>().map_err(|_| format!("'{v}' is not a non-negative integer; {FORM}"));
        let spec = SweepSpec {
            param,
            start: num(start)?,
            step: num(step)?,
            end: num(end)?,
        };
        if spec.step == 0 {
            return Err("sweep step must be ≥ 1".into());
        }
        if spec.start > spec.end {
            return Err("sweep start must not exceed end".into());
        }
        Ok(spec)
    }
}

fn parse_seq_bits(s: &str) -> Result<SeqBits, String> {
    if s == "auto" {
        return Ok(SeqBits::Auto);
    }
    match s.parse::<u8>() {
        Ok(n) if (1..=16).contains(&n) => Ok(SeqBits::Fixed(n)),
        _ => Err("expected an integer in [1,16] or 'auto'".into()),
    }
}

fn parse_rate(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v >= 0.0 => Ok(v),
        _ => Err("expected a real number ≥ 0".into()),
    }
}

fn parse_prob(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if (0.0..=1.0).contains(&v) => Ok(v),
        _ => Err("expected a probability in [0,1]".into()),
    }
}

/// Monte Carlo simulator for framed slotted ALOHA RFID anti-collision.
#[derive(Debug, Parser)]
#[command(name = "afsa-sim", version, allow_negative_numbers = true)]
struct Args {
    /// Protocol to simulate.
    #[arg(long, value_enum, default_value = "afsa")]
    protocol: ProtocolArg,
    /// Initial tag population K.
    #[arg(long, default_value_t = 100)]
    tags: u32,
    /// Slot count N of the first frame.
    #[arg(long, default_value_t = 128)]
    frame: u32,
    /// Reservation sequence length n: 1..16 or auto.
    #[arg(long = "seq-bits", default_value = "auto", value_parser = parse_seq_bits)]
    seq_bits: SeqBits,
    #[arg(long, default_value_t = 25)]
    trials: u32,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long = "max-rounds", default_value_t = 1000)]
    max_rounds: u32,
    /// Expected tag arrivals per round.
    #[arg(long = "arrival-rate", default_value = "0", value_parser = parse_rate)]
    arrival_rate: f64,
    /// Per-tag, per-round departure probability.
    #[arg(long = "departure-prob", default_value = "0", value_parser = parse_prob)]
    departure_prob: f64,
    /// Sweep one parameter, e.g. tags=50:50:500.
    #[arg(long)]
    sweep: Option<SweepSpec>,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
    /// One row per round instead of one per trial.
    #[arg(long = "per-round")]
    per_round: bool,
}

/// What the command line asks for.
#[derive(Debug, Clone, PartialEq)]
pub struct RunPlan {
    pub base: ExperimentConfig,
    pub sweep: Option<SweepSpec>,
    pub out: Option<PathBuf>,
    pub format: ReportFormat,
    pub per_round: bool,
}

impl RunPlan {
    /// The configs to run, each with its swept parameter labels. Without a
    /// sweep this is the base config alone.
    pub fn cells(&self) -> Vec<(Vec<(String, String)>, ExperimentConfig)> {
        match self.sweep {
            None => vec![(Vec::new(), self.base)],
            Some(spec) => spec
                .values()
                .map(|v| {
                    let mut config = self.base;
                    spec.param.apply(&mut config, v);
                    (vec![(spec.param.name().to_string(), v.to_string())], config)
                })
                .collect(),
        }
    }
}

/// Parses `argv` (program name first). Help and version requests come back
/// as errors too; check [`clap::Error::kind`].
pub fn parse_cli<I, T>(argv: I) -> Result<RunPlan, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = Args::try_parse_from(argv)?;
    Ok(RunPlan {
        base: ExperimentConfig {
            protocol: args.protocol.into(),
            k_initial: args.tags,
            frame_slots: args.frame,
            seq_bits: args.seq_bits,
            trials: args.trials,
            seed: args.seed,
            max_rounds: args.max_rounds,
            arrival_rate: args.arrival_rate,
            departure_prob: args.departure_prob,
            timing: TimingModel::default(),
        },
        sweep: args.sweep,
        out: args.out,
        format: match args.format {
            FormatArg::Csv => ReportFormat::Csv,
            FormatArg::Json => ReportFormat::Json,
        },
        per_round: args.per_round,
    })
}
