//! The intent-conditioned value model: a shared backbone with three heads
//! realizing V(s, g, z) = sum_i phi_i(f(s)) * T_i(f(z)) * psi_i(f(g)).

use tensor_core::{
    mlp_forward, mlp_forward_value, ops, BoundParams, ParamSet, Tape, TapeTensor, Tensor,
};
use worlds::Observation;

use crate::encoder::EncoderArch;
use crate::error::Result;

pub const BACKBONE_PREFIX: &str = "f.";
pub const PHI_PREFIX: &str = "phi.";
pub const PSI_PREFIX: &str = "psi.";
pub const T_PREFIX: &str = "t.";

#[derive(Debug, Clone)]
pub struct IcvfModel {
    pub arch: EncoderArch,
    pub params: ParamSet,
    /// Delayed copy used for bootstrap targets.
    pub target: ParamSet,
}

impl IcvfModel {
    pub fn init(arch: EncoderArch, seed: u64) -> Result<Self> {
        arch.validate()?;
        let mut rng = tensor_core::rng::seeded_rng(seed, "icvf-init", 0);
        let mut params = arch.init_backbone(BACKBONE_PREFIX, &mut rng)?;
        params.merge("", arch.init_head(PHI_PREFIX, &mut rng)?)?;
        params.merge("", arch.init_head(PSI_PREFIX, &mut rng)?)?;
        params.merge("", arch.init_head(T_PREFIX, &mut rng)?)?;
        let target = params.clone();
        Ok(IcvfModel {
            arch,
            params,
            target,
        })
    }

    /// Batched value under the given parameter set (online or target),
    /// tape-free. Inputs are [B, feature] tensors; output is [B].
    pub fn values_with(
        &self,
        params: &ParamSet,
        s: &Tensor,
        g: &Tensor,
        z: &Tensor,
    ) -> Result<Tensor> {
        let head = self.arch.head_spec();
        let es = self.arch.backbone_forward_value(params, BACKBONE_PREFIX, s)?;
        let eg = self.arch.backbone_forward_value(params, BACKBONE_PREFIX, g)?;
        let ez = self.arch.backbone_forward_value(params, BACKBONE_PREFIX, z)?;
        let phi = mlp_forward_value(&head, params, PHI_PREFIX, &es)?;
        let psi = mlp_forward_value(&head, params, PSI_PREFIX, &eg)?;
        let t = mlp_forward_value(&head, params, T_PREFIX, &ez)?;
        Ok(ops::sum_rows(&ops::mul(&ops::mul(&phi, &t)?, &psi)?))
    }

    /// Same computation recorded on a tape for gradients.
    pub fn values_tape(
        &self,
        tape: &Tape,
        bound: &BoundParams,
        s: &Tensor,
        g: &Tensor,
        z: &Tensor,
    ) -> Result<TapeTensor> {
        let head = self.arch.head_spec();
        let st = tape.leaf(s.clone());
        let gt = tape.leaf(g.clone());
        let zt = tape.leaf(z.clone());
        let es = self.arch.backbone_forward(tape, bound, BACKBONE_PREFIX, st)?;
        let eg = self.arch.backbone_forward(tape, bound, BACKBONE_PREFIX, gt)?;
        let ez = self.arch.backbone_forward(tape, bound, BACKBONE_PREFIX, zt)?;
        let phi = mlp_forward(tape, &head, bound, PHI_PREFIX, es)?;
        let psi = mlp_forward(tape, &head, bound, PSI_PREFIX, eg)?;
        let t = mlp_forward(tape, &head, bound, T_PREFIX, ez)?;
        Ok(tape.sum_rows(tape.mul(tape.mul(phi, t)?, psi)?)?)
    }

    /// Value of one (state, goal, intent) observation triple.
    pub fn value(&self, s: &Observation, g: &Observation, z: &Observation) -> Result<f64> {
        self.value_with(&self.params, s, g, z)
    }

    pub fn value_with(
        &self,
        params: &ParamSet,
        s: &Observation,
        g: &Observation,
        z: &Observation,
    ) -> Result<f64> {
        let fs = self.arch.features.batch(&[s])?;
        let fg = self.arch.features.batch(&[g])?;
        let fz = self.arch.features.batch(&[z])?;
        Ok(self.values_with(params, &fs, &fg, &fz)?.data()[0])
    }

    /// The encoder stack (backbone + phi head) that downstream Q/policy
    /// networks initialize from.
    pub fn encoder_params(&self) -> Result<ParamSet> {
        let mut out = ParamSet::new();
        for (name, tensor) in self.params.iter() {
            if name.starts_with(BACKBONE_PREFIX) || name.starts_with(PHI_PREFIX) {
                out.insert(name, tensor.clone())?;
            }
        }
        Ok(out)
    }

    /// Full [n, n, n] value table in tabular mode, indexed (s, g, z) with the
    /// free-cell enumeration.
    pub fn value_table(&self) -> Result<Vec<f64>> {
        let n = self.arch.features.dim();
        let head = self.arch.head_spec();
        let mut eye = Tensor::zeros(&[n, n]);
        for i in 0..n {
            eye.data_mut()[i * n + i] = 1.0;
        }
        let emb = self
            .arch
            .backbone_forward_value(&self.params, BACKBONE_PREFIX, &eye)?;
        let phi = mlp_forward_value(&head, &self.params, PHI_PREFIX, &emb)?;
        let psi = mlp_forward_value(&head, &self.params, PSI_PREFIX, &emb)?;
        let t = mlp_forward_value(&head, &self.params, T_PREFIX, &emb)?;
        let k = self.arch.head_dim;
        let mut out = vec![0.0; n * n * n];
        for s in 0..n {
            for g in 0..n {
                for z in 0..n {
                    let mut acc = 0.0;
                    for i in 0..k {
                        acc += phi.data()[s * k + i] * t.data()[z * k + i] * psi.data()[g * k + i];
                    }
                    out[(s * n + g) * n + z] = acc;
                }
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::FeatureMode;
    use tensor_core::Activation;

    /// Head params that make phi/psi/T produce fixed outputs regardless of
    /// input: zero weights, chosen biases.
    fn fixed_output_model(phi_bias: Vec<f64>, psi_bias: Vec<f64>, t_bias: Vec<f64>) -> IcvfModel {
        let k = phi_bias.len();
        let arch = EncoderArch {
            features: FeatureMode::Grid { dim: 4 },
            identity_backbone: true,
            backbone_hidden: vec![],
            embed_dim: 4,
            head_hidden: vec![],
            head_dim: k,
            activation: Activation::Relu,
            layer_norm: false,
        };
        let mut params = ParamSet::new();
        for (prefix, bias) in [
            (PHI_PREFIX, phi_bias),
            (PSI_PREFIX, psi_bias),
            (T_PREFIX, t_bias),
        ] {
            params
                .insert(format!("{prefix}w0"), Tensor::zeros(&[4, k]))
                .unwrap();
            params
                .insert(format!("{prefix}b0"), Tensor::from_vec(bias).unwrap())
                .unwrap();
        }
        let target = params.clone();
        IcvfModel {
            arch,
            params,
            target,
        }
    }

    fn unit_inputs() -> (Tensor, Tensor, Tensor) {
        let x = Tensor::new(vec![1, 4], vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        (x.clone(), x.clone(), x)
    }

    #[test]
    fn basis_vectors_contract_to_one() {
        // phi = e1, psi = e1, T = all ones -> sum_i phi_i T_i psi_i = 1.
        let model = fixed_output_model(
            vec![1.0, 0.0, 0.0],
            vec![1.0, 0.0, 0.0],
            vec![1.0, 1.0, 1.0],
        );
        let (s, g, z) = unit_inputs();
        let v = model.values_with(&model.params, &s, &g, &z).unwrap();
        assert_eq!(v.data(), &[1.0]);
    }

    #[test]
    fn orthogonal_heads_contract_to_zero() {
        let model = fixed_output_model(
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![1.0, 1.0, 1.0],
        );
        let (s, g, z) = unit_inputs();
        let v = model.values_with(&model.params, &s, &g, &z).unwrap();
        assert_eq!(v.data(), &[0.0]);
    }

    /// Expected value computed with an independent scratch-script contraction
    /// over the same fixed head outputs.
    #[test]
    fn fixed_heads_match_independent_contraction() {
        let model = fixed_output_model(
            vec![0.3, -1.2, 0.7],
            vec![2.0, 0.5, -0.25],
            vec![-1.0, 0.4, 1.5],
        );
        let (s, g, z) = unit_inputs();
        let v = model.values_with(&model.params, &s, &g, &z).unwrap();
        // 0.3*-1.0*2.0 + -1.2*0.4*0.5 + 0.7*1.5*-0.25 = -1.1025
        assert!((v.data()[0] - (-1.1025)).abs() < 1e-12);
    }

    #[test]
    fn tape_and_plain_values_agree() {
        let arch = EncoderArch::grid(6);
        let model = IcvfModel::init(arch, 0).unwrap();
        let s = Tensor::new(vec![2, 6], vec![0.5; 12]).unwrap();
        let g = Tensor::new(vec![2, 6], (0..12).map(|i| i as f64 / 12.0).collect()).unwrap();
        let z = Tensor::new(vec![2, 6], vec![1.0; 12]).unwrap();
        let plain = model.values_with(&model.params, &s, &g, &z).unwrap();
        let tape = Tape::new();
        let bound = model.params.bind(&tape);
        let vt = model.values_tape(&tape, &bound, &s, &g, &z).unwrap();
        assert_eq!(tape.value(vt).data(), plain.data());
    }

    #[test]
    fn equal_seeds_give_bit_identical_models() {
        let a = IcvfModel::init(EncoderArch::grid(6), 42).unwrap();
        let b = IcvfModel::init(EncoderArch::grid(6), 42).unwrap();
        let c = IcvfModel::init(EncoderArch::grid(6), 43).unwrap();
        assert!(a.params.bit_identical(&b.params));
        assert!(!a.params.bit_identical(&c.params));
    }
}
