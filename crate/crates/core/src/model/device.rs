use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::mhz_to_angular;

/// Name of the bundled preset holding the characterized 5-qubit device.
pub const PAPER_DEVICE: &str = "paper-device";

/// Per-qubit physical parameters and nearest-neighbour couplings.
///
/// Frequencies are ordinary frequencies ν = ω/2π in MHz, times in µs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceParams {
    pub n_qubits: usize,
    /// g_{j,j+1}/2π for j = 1..n−1.
    pub couplings_mhz: Vec<f64>,
    /// U_j/2π; negative for transmons.
    pub anharmonicity_mhz: Vec<f64>,
    pub t1_us: Vec<f64>,
    pub t2_star_us: Vec<f64>,
    /// Probability of reading 0 when prepared in |0⟩.
    pub readout_f0: Vec<f64>,
    /// Probability of reading 1 when prepared in |1⟩.
    pub readout_f1: Vec<f64>,
}

impl DeviceParams {
    /// The characterized 5-qubit chain.
    pub fn paper_device() -> Self {
        DeviceParams {
            n_qubits: 5,
            couplings_mhz: vec![14.60, 14.65, 14.17, 14.26],
            anharmonicity_mhz: vec![-242.0, -196.0, -239.0, -196.0, -242.0],
            t1_us: vec![17.0, 30.0, 42.0, 17.0, 36.0],
            t2_star_us: vec![1.53, 4.39, 2.20, 2.19, 2.25],
            readout_f0: vec![0.981, 0.957, 0.957, 0.923, 0.971],
            readout_f1: vec![0.853, 0.897, 0.891, 0.859, 0.917],
        }
    }

    /// Looks up a bundled preset by name.
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            PAPER_DEVICE => Ok(Self::paper_device()),
            other => Err(Error::domain(format!(
                "unknown device preset `{other}` (available: {PAPER_DEVICE})"
            ))),
        }
    }

    /// A chain with identical couplings and ideal readout. Anharmonicity and
    /// coherence times are copied from the first qubit of the reference device.
    pub fn uniform(n_qubits: usize, coupling_mhz: f64) -> Result<Self> {
        let p = DeviceParams {
            n_qubits,
            couplings_mhz: vec![coupling_mhz; n_qubits.saturating_sub(1)],
            anharmonicity_mhz: vec![-242.0; n_qubits],
            t1_us: vec![17.0; n_qubits],
            t2_star_us: vec![1.53; n_qubits],
            readout_f0: vec![1.0; n_qubits],
            readout_f1: vec![1.0; n_qubits],
        };
        p.validate()?;
        Ok(p)
    }

    /// The first `n` qubits of this device with their couplings.
    pub fn prefix(&self, n: usize) -> Result<Self> {
        if n == 0 || n > self.n_qubits {
            return Err(Error::domain(format!(
                "cannot take {n} of {} qubits",
                self.n_qubits
            )));
        }
        Ok(DeviceParams {
            n_qubits: n,
            couplings_mhz: self.couplings_mhz[..n - 1].to_vec(),
            anharmonicity_mhz: self.anharmonicity_mhz[..n].to_vec(),
            t1_us: self.t1_us[..n].to_vec(),
            t2_star_us: self.t2_star_us[..n].to_vec(),
            readout_f0: self.readout_f0[..n].to_vec(),
            readout_f1: self.readout_f1[..n].to_vec(),
        })
    }

    /// Parses and validates the key-value text form.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let p: DeviceParams = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        p.validate()?;
        Ok(p)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("device parameters always serialize")
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_qubits;
        if n == 0 {
            return Err(Error::validation("device.n_qubits", "must be positive"));
        }
        let check_len = |name: &str, len: usize, want: usize| {
            if len != want {
                Err(Error::validation(
                    format!("device.{name}"),
                    format!("expected {want} entries, found {len}"),
                ))
            } else {
                Ok(())
            }
        };
        check_len("couplings_mhz", self.couplings_mhz.len(), n - 1)?;
        check_len("anharmonicity_mhz", self.anharmonicity_mhz.len(), n)?;
        check_len("t1_us", self.t1_us.len(), n)?;
        check_len("t2_star_us", self.t2_star_us.len(), n)?;
        check_len("readout_f0", self.readout_f0.len(), n)?;
        check_len("readout_f1", self.readout_f1.len(), n)?;

        let each = |name: &str, v: &[f64], ok: &dyn Fn(f64) -> bool, bound: &str| {
            for (i, &x) in v.iter().enumerate() {
                if !x.is_finite() || !ok(x) {
                    return Err(Error::validation(
                        format!("device.{name}[{i}]"),
                        format!("value {x} violates bound {bound}"),
                    ));
                }
            }
            Ok(())
        };
        each("couplings_mhz", &self.couplings_mhz, &|x| x > 0.0, "> 0")?;
        each("anharmonicity_mhz", &self.anharmonicity_mhz, &|x| x < 0.0, "< 0")?;
        each("t1_us", &self.t1_us, &|x| x > 0.0, "> 0")?;
        each("t2_star_us", &self.t2_star_us, &|x| x > 0.0, "> 0")?;
        let prob = |x: f64| x > 0.0 && x <= 1.0;
        each("readout_f0", &self.readout_f0, &prob, "(0, 1]")?;
        each("readout_f1", &self.readout_f1, &prob, "(0, 1]")?;
        Ok(())
    }

    /// Coupling g_{j,j+1} in rad/ns for the 1-based bond index j.
    pub fn coupling_angular(&self, bond: usize) -> f64 {
        mhz_to_angular(self.couplings_mhz[bond - 1])
    }

    /// U_j in rad/ns for the 1-based site index j.
    pub fn anharmonicity_angular(&self, site: usize) -> f64 {
        mhz_to_angular(self.anharmonicity_mhz[site - 1])
    }

    pub fn mean_coupling_mhz(&self) -> f64 {
        self.couplings_mhz.iter().sum::<f64>() / self.couplings_mhz.len().max(1) as f64
    }
}

/// Linear on-site potential h_j = F·j with 1-based sites.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    /// F/2π in MHz.
    pub gradient_mhz: f64,
}

impl PotentialSpec {
    pub fn linear(gradient_mhz: f64) -> Self {
        PotentialSpec { gradient_mhz }
    }

    pub fn flat() -> Self {
        Self::linear(0.0)
    }

    /// h_j/2π in MHz.
    pub fn offset_mhz(&self, site: usize) -> f64 {
        self.gradient_mhz * site as f64
    }

    /// h_j in rad/ns.
    pub fn offset_angular(&self, site: usize) -> f64 {
        mhz_to_angular(self.offset_mhz(site))
    }

    pub fn offsets_mhz(&self, n_sites: usize) -> Vec<f64> {
        (1..=n_sites).map(|j| self.offset_mhz(j)).collect()
    }
}
