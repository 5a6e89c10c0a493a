//! Experiment configuration as read from JSON.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::css::{code_by_name, CssCode};
use crate::pauli::{Gate, PauliOperator};
use crate::qotp::{parse_gate, AttackTarget, BrOtpMode, Registers};
use crate::stats::Z95;
use crate::trap::{AttackKind, TrapFamily};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    TrapSecurity,
    TwirlCheck,
    GadgetCheck,
    QotpRun,
    QotpAttack,
    SimCompare,
    TeleportCheck,
    BrotpCheck,
}

impl Command {
    pub const ALL: [Command; 8] = [
        Command::TrapSecurity,
        Command::TwirlCheck,
        Command::GadgetCheck,
        Command::QotpRun,
        Command::QotpAttack,
        Command::SimCompare,
        Command::TeleportCheck,
        Command::BrotpCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::TrapSecurity => "trap-security",
            Command::TwirlCheck => "twirl-check",
            Command::GadgetCheck => "gadget-check",
            Command::QotpRun => "qotp-run",
            Command::QotpAttack => "qotp-attack",
            Command::SimCompare => "sim-compare",
            Command::TeleportCheck => "teleport-check",
            Command::BrotpCheck => "brotp-check",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| HarnessError::UnknownCommand(s.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodeConfig {
    pub base: String,
    #[serde(default = "one")]
    pub levels: usize,
}

fn one() -> usize {
    1
}

impl Default for CodeConfig {
    fn default() -> Self {
        CodeConfig { base: "steane".into(), levels: 1 }
    }
}

impl CodeConfig {
    pub fn toy() -> Self {
        CodeConfig { base: "toy".into(), levels: 1 }
    }

    pub fn code(&self) -> Result<CssCode, HarnessError> {
        Ok(code_by_name(&self.base, self.levels)?)
    }

    pub fn family(&self) -> Result<TrapFamily, HarnessError> {
        Ok(TrapFamily::new(self.code()?)?)
    }
}

/// A channel to compile into a one-time program.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProgramDescriptor {
    /// Gates as `"NAME w0 [w1]"`, e.g. `"H 0"` or `"CNOT 0 1"`.
    pub channel: Vec<String>,
    #[serde(default)]
    pub code: CodeConfig,
    /// MAC field size of the compiled BR-OTP; absent means the ideal functionality.
    #[serde(default)]
    pub kappa: Option<u32>,
    #[serde(default)]
    pub seed: u64,
    /// Register split; defaults to every wire in `B`.
    #[serde(default)]
    pub registers: Option<Registers>,
}

impl ProgramDescriptor {
    pub fn new(channel: &[&str], code: CodeConfig, kappa: Option<u32>) -> Self {
        ProgramDescriptor { channel: channel.iter().map(|s| s.to_string()).collect(), code, kappa, seed: 0, registers: None }
    }

    pub fn gates(&self) -> Result<Vec<Gate>, HarnessError> {
        self.channel
            .iter()
            .map(|g| {
                let mut parts = g.split_whitespace();
                let name = parts.next().ok_or_else(|| HarnessError::Config(format!("empty gate {g:?}")))?;
                let wires = parts
                    .map(|w| w.parse::<usize>().map_err(|_| HarnessError::Config(format!("bad wire in {g:?}"))))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(parse_gate(name, &wires)?)
            })
            .collect()
    }

    pub fn registers(&self) -> Result<Registers, HarnessError> {
        if let Some(r) = self.registers {
            return Ok(r);
        }
        let width = self.gates()?.iter().flat_map(Gate::qubits).max().map_or(1, |w| w + 1);
        Ok(Registers::new(0, width, 0))
    }

    pub fn mode(&self) -> BrOtpMode {
        match self.kappa {
            Some(kappa) => BrOtpMode::Compiled { kappa },
            None => BrOtpMode::Ideal,
        }
    }
}

/// A deviation of the receiver, for `qotp-attack` and `sim-compare`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AdversarySpec {
    Honest,
    Pauli { target: AttackTarget, pauli: String },
}

impl AdversarySpec {
    pub fn block(name: &str, pauli: &str) -> Self {
        AdversarySpec::Pauli { target: AttackTarget::Block(name.into()), pauli: pauli.into() }
    }

    pub fn pauli(&self) -> Result<Option<PauliOperator>, HarnessError> {
        match self {
            AdversarySpec::Honest => Ok(None),
            AdversarySpec::Pauli { pauli, .. } => Ok(Some(pauli.parse()?)),
        }
    }

    pub fn label(&self) -> String {
        match self {
            AdversarySpec::Honest => "honest".into(),
            AdversarySpec::Pauli { target: AttackTarget::Block(b), pauli } => format!("{pauli} on {b}"),
            AdversarySpec::Pauli { target: AttackTarget::Purification, pauli } => format!("{pauli} on W"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleCounts {
    /// Random unitaries in `twirl-check`.
    pub unitaries: usize,
    /// Sampled permutations for the low-weight exhaustive check.
    pub permutations: usize,
    /// Permutations sampled per attack in the security sweep.
    pub trials: u64,
    /// Random attacks per weight and letter pattern.
    pub attacks: usize,
    pub weights: Vec<usize>,
    pub kinds: Vec<AttackKind>,
    /// Random logical states for the measure/decode comparison.
    pub logical_states: usize,
    /// Seeds per input state in `gadget-check`.
    pub seeds_per_input: usize,
    /// Honest runs in `qotp-run`, keyed runs in `qotp-attack`.
    pub runs: usize,
    /// Trials in `teleport-check`.
    pub teleports: usize,
    /// Random 3-round programs in `brotp-check`.
    pub programs: usize,
    /// Random message pairs for the exact forgery check.
    pub mac_pairs: usize,
}

impl Default for SampleCounts {
    fn default() -> Self {
        SampleCounts {
            unitaries: 25,
            permutations: 1000,
            trials: 100_000,
            attacks: 4,
            weights: vec![3],
            kinds: vec![AttackKind::X, AttackKind::Y, AttackKind::Z, AttackKind::Mixed],
            logical_states: 20,
            seeds_per_input: 2,
            runs: 1,
            teleports: 400,
            programs: 64,
            mac_pairs: 8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Exact symbolic comparisons.
    pub exact: f64,
    pub statevector: f64,
    pub stabilizer_sum: f64,
    /// Dense twirl identity.
    pub twirl: f64,
    /// Normal quantile of the two-sided confidence intervals.
    pub ci_z: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { exact: 0.0, statevector: 1e-9, stabilizer_sum: 1e-6, twirl: 1e-10, ci_z: Z95 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputPaths {
    /// Directory for `<command>.json` and `<command>.csv`.
    pub dir: Option<String>,
}

/// Everything that determines a run, together with the crate version.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Command,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub code: CodeConfig,
    #[serde(default)]
    pub samples: SampleCounts,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub program: Option<ProgramDescriptor>,
    #[serde(default)]
    pub adversaries: Vec<AdversarySpec>,
    #[serde(default)]
    pub outputs: OutputPaths,
}

impl ExperimentConfig {
    pub fn new(command: Command, seed: u64) -> Self {
        ExperimentConfig {
            command,
            seed,
            code: CodeConfig::default(),
            samples: SampleCounts::default(),
            tolerances: Tolerances::default(),
            program: None,
            adversaries: Vec::new(),
            outputs: OutputPaths::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        serde_json::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    /// The program of `qotp-*` and `sim-compare`, or the command's default.
    pub fn program_or_default(&self) -> ProgramDescriptor {
        if let Some(p) = &self.program {
            return p.clone();
        }
        match self.command {
            Command::QotpAttack => ProgramDescriptor::new(&["Y 0"], self.code.clone(), Some(16)),
            Command::SimCompare => ProgramDescriptor::new(&["Y 0"], CodeConfig::toy(), None),
            _ => ProgramDescriptor::new(&["X 0"], self.code.clone(), Some(16)),
        }
    }

    /// Adversaries of `qotp-attack` and `sim-compare`, or the command's defaults.
    pub fn adversaries_or_default(&self) -> Vec<AdversarySpec> {
        if !self.adversaries.is_empty() {
            return self.adversaries.clone();
        }
        match self.command {
            Command::QotpAttack => {
                let n = self.program_or_default().code.family().map(|f| f.block_len()).unwrap_or(21);
                let mut p = "+".to_string();
                p.extend((0..n).map(|i| if i < 3 { 'X' } else { 'I' }));
                vec![AdversarySpec::block("M/0", &p)]
            }
            _ => vec![
                AdversarySpec::Honest,
                AdversarySpec::block("M/0", "+XII"),
                AdversarySpec::block("M/1", "+IZI"),
                AdversarySpec::block("E/0", "+IIY"),
                AdversarySpec::block("B/0", "+XXX"),
                AdversarySpec::Pauli { target: AttackTarget::Purification, pauli: "+Y".into() },
            ],
        }
    }
}
