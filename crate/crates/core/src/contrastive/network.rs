use rand::Rng;

use crate::error::{Error, Result};
use crate::nn::{Activation, Mlp};

/// Shape of the encoder `f` and projector `g`.
///
/// The encoder maps the flattened view through `hidden` widths to
/// `feature_dim`, applying `activation` after every layer. The projector is
/// affine → activation → affine to `projector_out`.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderSpec {
    pub input_dim: usize,
    pub hidden: Vec<usize>,
    pub feature_dim: usize,
    pub activation: Activation,
    pub projector_hidden: usize,
    pub projector_out: usize,
}

impl EncoderSpec {
    pub fn new(input_dim: usize) -> Self {
        Self {
            input_dim,
            hidden: vec![128],
            feature_dim: 64,
            activation: Activation::Relu,
            projector_hidden: 256,
            projector_out: 256,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let widths = [self.input_dim, self.feature_dim, self.projector_hidden, self.projector_out];
        if widths.iter().chain(&self.hidden).any(|&w| w == 0) {
            return Err(Error::InvalidConfig(format!("zero layer width in {self:?}")));
        }
        Ok(())
    }

    fn encoder_dims(&self) -> Vec<usize> {
        let mut dims = vec![self.input_dim];
        dims.extend(&self.hidden);
        dims.push(self.feature_dim);
        dims
    }
}

/// Encoder plus the projector that is discarded after pre-training.
#[derive(Debug, Clone, PartialEq)]
pub struct SimclrModel {
    pub spec: EncoderSpec,
    pub encoder: Mlp,
    pub projector: Mlp,
}

impl SimclrModel {
    pub fn init<R: Rng + ?Sized>(spec: &EncoderSpec, rng: &mut R) -> Result<Self> {
        spec.validate()?;
        let dims = spec.encoder_dims();
        let encoder = Mlp::init(&dims, &vec![spec.activation; dims.len() - 1], rng);
        let projector = Mlp::init(
            &[spec.feature_dim, spec.projector_hidden, spec.projector_out],
            &[spec.activation, Activation::Identity],
            rng,
        );
        Ok(Self {
            spec: spec.clone(),
            encoder,
            projector,
        })
    }

    pub fn zeros(spec: &EncoderSpec) -> Result<Self> {
        let mut m = Self::init(spec, &mut crate::rng::seeded(0))?;
        m.encoder.fill_zero();
        m.projector.fill_zero();
        Ok(m)
    }

    pub fn features(&self, input: &[f64]) -> Result<Vec<f64>> {
        check_input(&self.spec, input)?;
        Ok(self.encoder.forward(input))
    }
}

fn check_input(spec: &EncoderSpec, input: &[f64]) -> Result<()> {
    if input.len() != spec.input_dim {
        return Err(Error::DimensionMismatch {
            context: "encoder input",
            expected: spec.input_dim,
            actual: input.len(),
        });
    }
    Ok(())
}

/// `(h, z)`: encoder features and their projection.
pub fn encoder_forward(model: &SimclrModel, input: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    check_input(&model.spec, input)?;
    let h = model.encoder.forward(input);
    let z = model.projector.forward(&h);
    Ok((h, z))
}
