//! Command-line definitions. Numeric options take unit suffixes and are stored in SI.
//! Frequencies are cyclic (Hz) at this boundary.

use clap::{Args, Parser, Subcommand};
use emech::units::{parse_quantity, Dimension};
use serde::Serialize;
use std::path::PathBuf;

fn quantity(dim: Dimension) -> impl Fn(&str) -> Result<f64, String> + Clone + Send + Sync + 'static {
    move |s: &str| parse_quantity(s, dim).map_err(|e| e.to_string())
}

macro_rules! parsers {
    ($($name:ident => $dim:ident),* $(,)?) => {
        $(
            pub fn $name(s: &str) -> Result<f64, String> {
                quantity(Dimension::$dim)(s)
            }
        )*
    };
}

parsers! {
    hz => Frequency,
    volt => Voltage,
    metre => Length,
    area => Area,
    volume => Volume,
    farad => Capacitance,
    second => Time,
    kelvin => Temperature,
    tesla => MagneticField,
    hz_per_volt => CouplingSlope,
    stiffness => Stiffness,
    field => ElectricField,
    pascal => Pressure,
    dipole => DipoleMoment,
    joule => Energy,
    decibel => Gain,
    number => Dimensionless,
}

#[derive(Debug, Parser, Serialize)]
#[command(name = "emech", version, about = "Simulation and parameter estimation for cavity electromechanical devices")]
pub struct Cli {
    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,

    /// Output root; each subcommand writes into <out>/<subcommand>.
    #[arg(long, global = true, env = "EMECH_OUTPUT_DIR", default_value = "emech-results")]
    pub out: PathBuf,

    /// Device table to use instead of the bundled one.
    #[arg(long, global = true)]
    pub devices: Option<PathBuf>,

    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
pub enum Command {
    /// Simulate an EIT reflection sweep and optionally fit it.
    Eit(EitArgs),
    /// Hybridized mode frequencies while the cavity is tuned through the mechanics by field.
    Crossing(CrossingArgs),
    /// Synthesize and fit an energy ringdown.
    Ringdown(RingdownArgs),
    /// Lifetime versus cavity detuning: ringdowns, then a fit of Γ(Δ) = Γᵢ + Γ_em(Δ).
    Lifetime(LifetimeArgs),
    /// Coupling versus bias from EIT fits, with the cooperativity table.
    Coupling(CouplingArgs),
    /// Forward model of the output noise spectrum.
    Psd(PsdArgs),
    /// Bath occupancies from a noise spectrum, or a synthetic sweep over bias.
    Thermometry(ThermometryArgs),
    /// Line gain and HEMT temperature from Johnson noise at several temperatures.
    CalibrateGain(CalibrateArgs),
    /// Equivalent circuit from physical parameters, or derived values of circuit records.
    Circuit(CircuitArgs),
    /// Two-level-system calculators.
    Tls(TlsArgs),
    /// Parallel-plate pull-in voltage and equilibrium gap.
    Pullin(PullinArgs),
    /// Fit a library model to a CSV file.
    Fit(FitArgs),
    /// List the device table.
    Devices(DevicesArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct EitArgs {
    /// Device id.
    #[arg(long, default_value = "A")]
    pub device: String,
    /// DC bias (V, e.g. `10V`).
    #[arg(long, value_parser = volt, default_value = "0")]
    pub vdc: f64,
    /// Coupling override, cyclic (Hz, e.g. `150kHz`). Default: device law at --vdc.
    #[arg(long, value_parser = hz)]
    pub g: Option<f64>,
    /// Cavity detuning from the mechanics, cyclic (Hz). Default: the device's untuned cavity.
    #[arg(long, value_parser = hz, allow_hyphen_values = true)]
    pub detuning: Option<f64>,
    /// Gaussian noise per quadrature (dimensionless reflection units).
    #[arg(long, value_parser = number, default_value = "0")]
    pub noise: f64,
    /// Points across the cavity; forced odd so the cavity center is sampled.
    #[arg(long, default_value_t = 801)]
    pub points: usize,
    /// Extra points within ±20 mechanical linewidths of the mechanics.
    #[arg(long, default_value_t = 201)]
    pub fine_points: usize,
    /// Fano phase on κₑ (rad).
    #[arg(long, value_parser = number, default_value = "0", allow_hyphen_values = true)]
    pub fano_phase: f64,
    /// Fit the synthetic trace with the EIT model.
    #[arg(long)]
    pub fit: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct CrossingArgs {
    #[arg(long, default_value = "B")]
    pub device: String,
    /// DC bias (V).
    #[arg(long, value_parser = volt, default_value = "25V")]
    pub vdc: f64,
    /// Coupling slope override (Hz/V, e.g. `42.7kHz/V`).
    #[arg(long, value_parser = hz_per_volt)]
    pub g0: Option<f64>,
    /// Largest in-plane field (T, e.g. `3mT`).
    #[arg(long, value_parser = tesla, default_value = "2.5mT")]
    pub b_max: f64,
    #[arg(long, default_value_t = 301)]
    pub steps: usize,
    /// Gaussian noise added to the mode frequencies before the crossing fit (Hz).
    #[arg(long, value_parser = hz, default_value = "0")]
    pub noise: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct ChainArgs {
    /// Amplifier gain (dB).
    #[arg(long, value_parser = decibel, default_value = "65.6dB")]
    pub gain: f64,
    /// Added noise of the amplifier chain (quanta).
    #[arg(long, value_parser = number, default_value = "10")]
    pub n_add: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct RingdownArgs {
    /// Total energy lifetime (s, e.g. `220us`).
    #[arg(long, value_parser = second, default_value = "220us")]
    pub tau: f64,
    /// Initial phonon number.
    #[arg(long, value_parser = number, default_value = "100")]
    pub n0: f64,
    /// Repetitions averaged.
    #[arg(long, value_parser = number, default_value = "50")]
    pub averages: f64,
    /// Detection window (s).
    #[arg(long, value_parser = second, default_value = "0.4us")]
    pub window: f64,
    /// IF bandwidth (Hz).
    #[arg(long, value_parser = hz, default_value = "1MHz")]
    pub if_bw: f64,
    #[command(flatten)]
    pub chain: ChainArgs,
    /// Emit the exact curve without noise.
    #[arg(long)]
    pub no_noise: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct LifetimeArgs {
    #[arg(long, default_value = "A")]
    pub device: String,
    /// DC bias (V).
    #[arg(long, value_parser = volt, default_value = "1.2V")]
    pub vdc: f64,
    /// Comma-separated cavity detunings, cyclic (Hz). Default: 0 to 3.2 MHz in 9 steps.
    #[arg(long, value_parser = hz, value_delimiter = ',')]
    pub detunings: Vec<f64>,
    #[arg(long, value_parser = number, default_value = "100")]
    pub n0: f64,
    #[arg(long, value_parser = number, default_value = "50")]
    pub averages: f64,
    /// IF bandwidth (Hz).
    #[arg(long, value_parser = hz, default_value = "1MHz")]
    pub if_bw: f64,
    #[command(flatten)]
    pub chain: ChainArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct CouplingArgs {
    #[arg(long, default_value = "B")]
    pub device: String,
    /// Comma-separated biases (V).
    #[arg(long, value_parser = volt, value_delimiter = ',', default_value = "2,5,10,15,20,25")]
    pub voltages: Vec<f64>,
    /// EIT noise per quadrature.
    #[arg(long, value_parser = number, default_value = "2e-3")]
    pub noise: f64,
    /// Intrinsic decay Γᵢ/2π for the cooperativity (Hz). Default: the device value.
    #[arg(long, value_parser = hz)]
    pub gamma_i: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct BathArgs {
    /// Waveguide occupancy (quanta).
    #[arg(long, value_parser = number, default_value = "0")]
    pub n_wg: f64,
    /// Microwave intrinsic bath occupancy (quanta).
    #[arg(long, value_parser = number, default_value = "0.1")]
    pub n_br: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct PsdArgs {
    #[arg(long, default_value = "A")]
    pub device: String,
    /// DC bias (V).
    #[arg(long, value_parser = volt, default_value = "25V")]
    pub vdc: f64,
    /// Cavity detuning ω_r − ω_m, cyclic (Hz). Default: readout cooperativity 1.
    #[arg(long, value_parser = hz, allow_hyphen_values = true)]
    pub detuning: Option<f64>,
    #[command(flatten)]
    pub baths: BathArgs,
    /// Mechanical bath occupancy (quanta).
    #[arg(long, value_parser = number, default_value = "0.86")]
    pub n_bm: f64,
    /// Add averaging noise for this many spectra per bin.
    #[arg(long, value_parser = number)]
    pub averages: Option<f64>,
    #[command(flatten)]
    pub chain: ChainArgs,
    /// IF bandwidth (Hz).
    #[arg(long, value_parser = hz, default_value = "1kHz")]
    pub if_bw: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct ThermometryArgs {
    /// Spectrum to analyse (`frequency_Hz,psd_W_per_Hz`). Without it a synthetic sweep runs.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, default_value = "A")]
    pub device: String,
    /// DC bias for --input (V).
    #[arg(long, value_parser = volt, default_value = "25V")]
    pub vdc: f64,
    /// Cavity detuning for --input, cyclic (Hz). Default: readout cooperativity 1.
    #[arg(long, value_parser = hz, allow_hyphen_values = true)]
    pub detuning: Option<f64>,
    /// Spectra averaged per bin.
    #[arg(long, value_parser = number, default_value = "1e5")]
    pub averages: f64,
    /// Biases of the synthetic sweep (V).
    #[arg(long, value_parser = volt, value_delimiter = ',', default_value = "0,5,10,15,20,25")]
    pub voltages: Vec<f64>,
    /// Truth mechanical bath occupancy per bias, or one value for all (quanta).
    #[arg(long, value_parser = number, value_delimiter = ',', default_value = "0.86")]
    pub n_bm: Vec<f64>,
    #[command(flatten)]
    pub baths: BathArgs,
    #[command(flatten)]
    pub chain: ChainArgs,
    /// IF bandwidth (Hz).
    #[arg(long, value_parser = hz, default_value = "1kHz")]
    pub if_bw: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct CalibrateArgs {
    /// CSV with `temperature_K,power_W[,sigma_W]` rows.
    #[arg(long, required_unless_present = "synthetic_gain")]
    pub input: Option<PathBuf>,
    /// Generate data with this gain instead of reading a file (dB).
    #[arg(long, value_parser = decibel)]
    pub synthetic_gain: Option<f64>,
    /// HEMT noise temperature for synthetic data (K).
    #[arg(long, value_parser = kelvin, default_value = "2.5K")]
    pub t_hemt: f64,
    /// Relative noise of synthetic powers.
    #[arg(long, value_parser = number, default_value = "2e-3")]
    pub noise: f64,
    /// Detection frequency (Hz).
    #[arg(long, value_parser = hz, default_value = "5.087GHz")]
    pub nu: f64,
    /// IF bandwidth (Hz).
    #[arg(long, value_parser = hz, default_value = "1MHz")]
    pub if_bw: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct CircuitArgs {
    /// File of `[circuit]` records to evaluate.
    #[arg(long, conflicts_with_all = ["g0", "cr", "vzpf"])]
    pub input: Option<PathBuf>,
    /// Coupling slope (Hz/V).
    #[arg(long, value_parser = hz_per_volt, default_value = "45.4kHz/V")]
    pub g0: f64,
    /// Resonator capacitance (F). Default 12.1 fF unless --vzpf is given.
    #[arg(long, value_parser = farad)]
    pub cr: Option<f64>,
    /// Resonator zero-point voltage instead of --cr (V).
    #[arg(long, value_parser = volt, conflicts_with = "cr")]
    pub vzpf: Option<f64>,
    /// Motion-coupled capacitance (F).
    #[arg(long, value_parser = farad, default_value = "0.2fF")]
    pub cm: f64,
    /// Resonator frequency (Hz).
    #[arg(long, value_parser = hz, default_value = "5.26GHz")]
    pub fr: f64,
    /// Mechanical frequency (Hz).
    #[arg(long, value_parser = hz, default_value = "5.26GHz")]
    pub fm: f64,
    /// Bias at which to re-quote the circuit and evaluate the direct waveguide decay (V).
    #[arg(long, value_parser = volt, default_value = "25V")]
    pub vdc: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct TlsArgs {
    #[command(subcommand)]
    pub calc: TlsCalc,
}

#[derive(Debug, Args, Serialize)]
pub struct TlsCommon {
    /// Electric dipole moment (C·m, or `1D`).
    #[arg(long, value_parser = dipole, default_value = "1D")]
    pub dipole: f64,
    /// ε/E ratio.
    #[arg(long, value_parser = number, default_value = "0.5")]
    pub ratio: f64,
}

#[derive(Debug, Subcommand, Serialize)]
pub enum TlsCalc {
    /// Stark shift for a static field.
    Stark {
        /// Field (V/m).
        #[arg(long, value_parser = field, default_value = "5e6 V/m")]
        field: f64,
        #[command(flatten)]
        common: TlsCommon,
    },
    /// Dipole coupling to a zero-point field.
    Dipole {
        /// Zero-point field (V/m).
        #[arg(long, value_parser = field, default_value = "50 V/m")]
        e_zpf: f64,
        #[command(flatten)]
        common: TlsCommon,
    },
    /// Zero-point strain and strain coupling.
    Strain {
        /// Mechanical frequency (Hz).
        #[arg(long, value_parser = hz, default_value = "5.087GHz")]
        freq: f64,
        /// Strain mode volume (m³).
        #[arg(long, value_parser = volume, default_value = "6e-21 m^3")]
        volume: f64,
        /// Young's modulus (Pa).
        #[arg(long, value_parser = pascal, default_value = "170GPa")]
        youngs: f64,
        /// Deformation potential (J, or eV).
        #[arg(long, value_parser = joule, default_value = "1.5eV")]
        deformation: f64,
        #[command(flatten)]
        common: TlsCommon,
    },
    /// Saturable TLS linewidth versus phonon number.
    Saturation {
        /// Participation ratio.
        #[arg(long, value_parser = number, default_value = "0.1")]
        participation: f64,
        /// TLS loss rate (Hz).
        #[arg(long, value_parser = hz, default_value = "100kHz")]
        gamma_tls: f64,
        /// Critical phonon number.
        #[arg(long, value_parser = number, default_value = "100")]
        n_c: f64,
        #[arg(long, value_parser = number, default_value = "0.7")]
        beta: f64,
        /// Residual linewidth (Hz).
        #[arg(long, value_parser = hz, default_value = "30kHz")]
        gamma_0: f64,
        /// Temperature (K).
        #[arg(long, value_parser = kelvin, default_value = "0K")]
        temperature: f64,
        /// Mode frequency (Hz).
        #[arg(long, value_parser = hz, default_value = "5.087GHz")]
        freq: f64,
        /// Use the variant whose root grows with n.
        #[arg(long)]
        growing: bool,
    },
    /// Telegraph frequency trace of a two-state fluctuator.
    Telegraph {
        /// Rate into the shifted state (Hz).
        #[arg(long, value_parser = hz, default_value = "10Hz")]
        rate_up: f64,
        /// Rate back (Hz).
        #[arg(long, value_parser = hz, default_value = "10Hz")]
        rate_down: f64,
        /// Frequency shift in the excited state (Hz).
        #[arg(long, value_parser = hz, default_value = "5kHz", allow_hyphen_values = true)]
        shift: f64,
        /// Unshifted frequency (Hz).
        #[arg(long, value_parser = hz, default_value = "5.087GHz")]
        freq: f64,
        /// Trace length (s).
        #[arg(long, value_parser = second, default_value = "10s")]
        duration: f64,
        /// Sampling step (s).
        #[arg(long, value_parser = second, default_value = "1ms")]
        dt: f64,
    },
}

#[derive(Debug, Args, Serialize)]
pub struct PullinArgs {
    /// Spring constant (N/m).
    #[arg(long, value_parser = stiffness, required_unless_present = "vpi")]
    pub k: Option<f64>,
    /// Target pull-in voltage; the stiffness is derived from it (V).
    #[arg(long, value_parser = volt, conflicts_with = "k")]
    pub vpi: Option<f64>,
    /// Rest gap (m).
    #[arg(long, value_parser = metre, default_value = "70nm")]
    pub gap: f64,
    /// Electrode area (m²). Default: the transducer area.
    #[arg(long, value_parser = area)]
    pub area: Option<f64>,
    /// Bias points up to pull-in in the gap table.
    #[arg(long, default_value_t = 101)]
    pub steps: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct FitArgs {
    /// Model name, see --list-models.
    #[arg(long, required_unless_present = "list_models")]
    pub model: Option<String>,
    /// CSV with `x,y[,sigma]` (real models) or `x,re,im[,sigma]` (complex models).
    #[arg(long, required_unless_present = "list_models")]
    pub input: Option<PathBuf>,
    /// Comma-separated initial parameters in SI. Optional for lorentzian and exp_decay.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub init: Vec<f64>,
    /// Print the model names and exit.
    #[arg(long)]
    pub list_models: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct DevicesArgs {
    /// Print JSON instead of a table.
    #[arg(long)]
    pub json: bool,
}
