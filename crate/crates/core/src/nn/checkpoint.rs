//! JSON network checkpoints.
//!
//! ```json
//! { "format_version": 1, "scalar": "f64", "network": { "input_width": 10, "layers": [ ... ] } }
//! ```
//!
//! Each layer carries its `spec` (width, activation, dropout), a row-major
//! `weight` matrix and a `bias` vector. Floats are written in shortest
//! round-trip form and parsed exactly, so save/load is bit-exact.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Network;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct NetworkCheckpoint<T> {
    pub format_version: u32,
    pub scalar: String,
    pub network: Network<T>,
}

fn scalar_name<T: Scalar>() -> &'static str {
    if std::mem::size_of::<T>() == 4 {
        "f32"
    } else {
        "f64"
    }
}

impl<T: Scalar> NetworkCheckpoint<T> {
    pub fn new(network: Network<T>) -> Self {
        Self {
            format_version: CHECKPOINT_FORMAT_VERSION,
            scalar: scalar_name::<T>().to_string(),
            network,
        }
    }

    pub fn into_network(self) -> Result<Network<T>> {
        if self.format_version != CHECKPOINT_FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported checkpoint version {}",
                self.format_version
            )));
        }
        if self.scalar != scalar_name::<T>() {
            return Err(Error::Format(format!(
                "checkpoint holds {} parameters, expected {}",
                self.scalar,
                scalar_name::<T>()
            )));
        }
        self.network.validate()?;
        Ok(self.network)
    }
}

impl<T: Scalar> Network<T> {
    pub fn to_checkpoint_string(&self) -> Result<String> {
        Ok(serde_json::to_string(&NetworkCheckpoint::new(self.clone()))?)
    }

    pub fn from_checkpoint_str(s: &str) -> Result<Self> {
        serde_json::from_str::<NetworkCheckpoint<T>>(s)?.into_network()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_checkpoint_string()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_checkpoint_str(&fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::LayerSpec;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn specs() -> Vec<LayerSpec> {
        vec![LayerSpec::relu(7).with_dropout(0.35), LayerSpec::tanh(3), LayerSpec::linear(2)]
    }

    proptest! {
        #[test]
        fn f64_round_trip_is_bit_exact(seed in any::<u64>(), scale in 1e-6f64..1e6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut net = Network::<f64>::new(5, &specs(), &mut rng).unwrap();
            for layer in net.layers_mut() {
                for w in layer.weight.values_mut() {
                    *w *= scale;
                }
            }
            let back = Network::<f64>::from_checkpoint_str(&net.to_checkpoint_string().unwrap()).unwrap();
            prop_assert_eq!(back.checksum(), net.checksum());
            prop_assert!(back.params().zip(net.params()).all(|(a, b)| a.to_bits() == b.to_bits()));
            prop_assert_eq!(back.specs(), net.specs());
        }

        #[test]
        fn f32_round_trip_is_bit_exact(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let net = Network::<f32>::new(5, &specs(), &mut rng).unwrap();
            let back = Network::<f32>::from_checkpoint_str(&net.to_checkpoint_string().unwrap()).unwrap();
            prop_assert!(back.params().zip(net.params()).all(|(a, b)| a.to_bits() == b.to_bits()));
        }
    }

    #[test]
    fn rejects_wrong_version_and_scalar() {
        let net = Network::<f64>::zeros(2, &[LayerSpec::linear(1)]).unwrap();
        let mut ck = NetworkCheckpoint::new(net.clone());
        ck.format_version = 99;
        let s = serde_json::to_string(&ck).unwrap();
        assert!(matches!(Network::<f64>::from_checkpoint_str(&s), Err(Error::Format(_))));

        let s = net.to_checkpoint_string().unwrap();
        assert!(matches!(Network::<f32>::from_checkpoint_str(&s), Err(Error::Format(_))));
    }

    #[test]
    fn rejects_inconsistent_shapes() {
        let net = Network::<f64>::zeros(2, &[LayerSpec::linear(1)]).unwrap();
        let s = net.to_checkpoint_string().unwrap().replace("\"input_width\":2", "\"input_width\":3");
        let e = Network::<f64>::from_checkpoint_str(&s).unwrap_err();
        assert!(e.to_string().contains("layer fan-in"), "{e}");

        let bare = serde_json::to_string(&net).unwrap().replace("\"input_width\":2", "\"input_width\":3");
        assert!(serde_json::from_str::<Network<f64>>(&bare).is_err());
    }

    #[test]
    fn save_and_load_file() {
        let dir = std::env::temp_dir().join(format!("gim-morl-ck-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("net.json");
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let net = Network::<f64>::new(4, &specs(), &mut rng).unwrap();
        net.save(&path).unwrap();
        assert_eq!(Network::<f64>::load(&path).unwrap(), net);
        fs::remove_dir_all(dir).ok();
    }
}
