use super::config::ModelConfig;
use super::modality::ModalityKind;
use crate::error::{Error, Result};
use crate::tensor::{Init, ParamId, ParameterStore, Tape, Tensor, Var};

/// Fixed sinusoidal position table, `T x d`.
pub fn positional_encoding(len: usize, dim: usize) -> Result<Tensor> {
    if dim % 2 != 0 {
        return Err(Error::Config(format!(
            "positional encoding needs an even dim, got {dim}"
        )));
    }
    if len == 0 {
        return Err(Error::Contract("positional encoding of an empty sequence".into()));
    }
    Ok(Tensor::from_fn(len, dim, |pos, c| {
        let i = c / 2;
        let angle = pos as f64 / 10000f64.powf(2.0 * i as f64 / dim as f64);
        if c % 2 == 0 {
            angle.sin()
        } else {
            angle.cos()
        }
    }))
}

/// Temporal convolution weights for one modality.
#[derive(Clone, Debug)]
pub struct EmbedParams {
    pub modality: ModalityKind,
    pub width: usize,
    pub input_dim: usize,
    pub kernel: ParamId,
    pub bias: ParamId,
}

impl EmbedParams {
    pub fn register(store: &mut ParameterStore, cfg: &ModelConfig, m: ModalityKind) -> Self {
        let width = cfg.kernels[m.index()];
        let input_dim = cfg.input_dims[m.index()];
        let prefix = format!("embed/{m}");
        let kernel = store.register(
            format!("{prefix}/kernel"),
            width * input_dim,
            cfg.dim,
            Init::Glorot {
                fan_in: width * input_dim,
                fan_out: cfg.dim,
            },
        );
        let bias = store.register(format!("{prefix}/bias"), 1, cfg.dim, Init::Zeros);
        EmbedParams {
            modality: m,
            width,
            input_dim,
            kernel,
            bias,
        }
    }
}

/// Low-level features `Z0 = conv1d(X) + PE(T)`, shape `T x d`.
///
/// `x` may be zero-padded past its real length; same-padding with zeros
/// keeps real positions identical to the unpadded computation.
pub fn embed_low_level(
    tape: &mut Tape,
    store: &ParameterStore,
    params: &EmbedParams,
    x: Var,
    cfg: &ModelConfig,
) -> Result<Var> {
    let [t, d_in] = tape.shape(x);
    if d_in != params.input_dim {
        return Err(Error::Config(format!(
            "{} input has {d_in} features, model expects {}",
            params.modality.name(),
            params.input_dim
        )));
    }
    let kernel = tape.param(params.kernel, store.get(params.kernel));
    let bias = tape.param(params.bias, store.get(params.bias));
    let conv = tape.conv1d_same(x, kernel, bias, params.width)?;
    if !cfg.positional_encoding {
        return Ok(conv);
    }
    let pe = tape.leaf(positional_encoding(t, cfg.dim)?);
    tape.add(conv, pe)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn encoding_values() {
        let pe = positional_encoding(5, 6).unwrap();
        assert_eq!(pe.row(0), &[0.0, 1.0, 0.0, 1.0, 0.0, 1.0]);
        assert!((pe.get(1, 0) - 0.841471).abs() < 1e-6);
        assert!(pe.data().iter().all(|v| (-1.0..=1.0).contains(v)));
        assert!(matches!(positional_encoding(3, 5), Err(Error::Config(_))));
    }

    #[test]
    fn identity_kernel_without_encoding_passes_input_through() {
        let cfg = ModelConfig {
            dim: 4,
            kernels: [1, 1, 1],
            input_dims: [4, 4, 4],
            positional_encoding: false,
            ..Default::default()
        };
        let mut store = ParameterStore::new(0);
        let p = EmbedParams::register(&mut store, &cfg, ModalityKind::Text);
        *store.get_mut(p.kernel) = Tensor::identity(4);
        let x0 = Tensor::from_fn(3, 4, |r, c| r as f64 - c as f64);
        let mut tape = Tape::new();
        let x = tape.leaf(x0.clone());
        let z = embed_low_level(&mut tape, &store, &p, x, &cfg).unwrap();
        assert_eq!(tape.value(z), &x0);
    }

    #[test]
    fn deterministic_and_shape_checked() {
        let cfg = ModelConfig::default();
        let mut store = ParameterStore::new(4);
        let p = EmbedParams::register(&mut store, &cfg, ModalityKind::Vision);
        let x0 = Tensor::from_fn(7, 6, |r, c| ((r * 6 + c) as f64).cos());
        let run = |x0: &Tensor| {
            let mut tape = Tape::new();
            let x = tape.leaf(x0.clone());
            let z = embed_low_level(&mut tape, &store, &p, x, &cfg).unwrap();
            tape.value(z).clone()
        };
        let (a, b) = (run(&x0), run(&x0));
        assert_eq!(a, b);
        assert_eq!(a.shape(), [7, 8]);

        let mut tape = Tape::new();
        let wrong = tape.leaf(Tensor::zeros(7, 5));
        assert!(matches!(
            embed_low_level(&mut tape, &store, &p, wrong, &cfg),
            Err(Error::Config(_))
        ));
    }
}
