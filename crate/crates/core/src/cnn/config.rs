use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `convs` 3×3 convolutions with `filters` output channels, then a 2×2 max-pool.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BlockSpec {
    pub convs: usize,
    pub filters: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModelConfig {
    pub input_h: usize,
    pub input_w: usize,
    pub input_c: usize,
    pub blocks: Vec<BlockSpec>,
    pub dense_widths: Vec<usize>,
    pub num_classes: usize,
}

impl ModelConfig {
    /// Two blocks of two convolutions (16 then 32 filters) and one 128-wide
    /// hidden layer: the 3×3-conv/2×2-pool VGG idiom at small scale.
    pub fn vgg_mini(input_h: usize, input_w: usize, input_c: usize, num_classes: usize) -> Self {
        ModelConfig {
            input_h,
            input_w,
            input_c,
            blocks: vec![
                BlockSpec { convs: 2, filters: 16 },
                BlockSpec { convs: 2, filters: 32 },
            ],
            dense_widths: vec![128],
            num_classes,
        }
    }

    /// Three single-convolution blocks (8, 16, 16 filters) and a 32-wide
    /// hidden layer; the audit-sized model for CPU-bound runs.
    pub fn compact(input_h: usize, input_w: usize, input_c: usize, num_classes: usize) -> Self {
        let block = |filters| BlockSpec { convs: 1, filters };
        ModelConfig {
            input_h,
            input_w,
            input_c,
            blocks: vec![block(8), block(16), block(16)],
            dense_widths: vec![32],
            num_classes,
        }
    }

    /// Two single-convolution blocks (8, 16 filters) and a 32-wide hidden
    /// layer, for patches too small for three pooling stages.
    pub fn compact_patch(input_h: usize, input_w: usize, input_c: usize, num_classes: usize) -> Self {
        ModelConfig {
            blocks: vec![BlockSpec { convs: 1, filters: 8 }, BlockSpec { convs: 1, filters: 16 }],
            ..Self::compact(input_h, input_w, input_c, num_classes)
        }
    }

    /// The VGG16 layout (13 convolutions, 5 pools, 4096-4096 head).
    pub fn vgg16(input_h: usize, input_w: usize, input_c: usize, num_classes: usize) -> Self {
        let block = |convs, filters| BlockSpec { convs, filters };
        ModelConfig {
            input_h,
            input_w,
            input_c,
            blocks: vec![
                block(2, 64),
                block(2, 128),
                block(3, 256),
                block(3, 512),
                block(3, 512),
            ],
            dense_widths: vec![4096, 4096],
            num_classes,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidModelConfig(msg));
        if self.input_h == 0 || self.input_w == 0 || self.input_c == 0 {
            return bad("input dimensions must be positive".into());
        }
        if self.num_classes < 2 {
            return bad(format!("num_classes must be >= 2, got {}", self.num_classes));
        }
        let factor = 1usize << self.blocks.len();
        if !self.input_h.is_multiple_of(factor) || !self.input_w.is_multiple_of(factor) {
            return bad(format!(
                "input {}x{} not divisible by 2^{} for {} pooling blocks",
                self.input_h,
                self.input_w,
                self.blocks.len(),
                self.blocks.len()
            ));
        }
        if self.blocks.iter().any(|b| b.convs == 0 || b.filters == 0) {
            return bad("every block needs at least one convolution and one filter".into());
        }
        if self.dense_widths.contains(&0) {
            return bad("dense widths must be positive".into());
        }
        Ok(())
    }

    /// Height, width and channels after the convolutional stack.
    pub fn feature_shape(&self) -> (usize, usize, usize) {
        let factor = 1usize << self.blocks.len();
        let c = self.blocks.last().map_or(self.input_c, |b| b.filters);
        (self.input_h / factor, self.input_w / factor, c)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
    /// Drives the per-epoch shuffle.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 40,
            batch_size: 32,
            learning_rate: 1e-3,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_epsilon: 1e-8,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidTrainConfig(msg.into()));
        if self.batch_size == 0 {
            return bad("batch_size must be >= 1");
        }
        if !(self.adam_beta1 > 0.0 && self.adam_beta1 < 1.0) {
            return bad("adam_beta1 must lie in (0, 1)");
        }
        if !(self.adam_beta2 > 0.0 && self.adam_beta2 < 1.0) {
            return bad("adam_beta2 must lie in (0, 1)");
        }
        if self.adam_epsilon.is_nan() || self.adam_epsilon <= 0.0 {
            return bad("adam_epsilon must be positive");
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad("learning_rate must be positive");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vgg_mini_and_vgg16_validate() {
        ModelConfig::vgg_mini(64, 64, 3, 10).validate().unwrap();
        ModelConfig::vgg16(224, 224, 3, 10).validate().unwrap();
        let convs: usize = ModelConfig::vgg16(224, 224, 3, 10)
            .blocks
            .iter()
            .map(|b| b.convs)
            .sum();
        assert_eq!(convs, 13);
    }

    #[test]
    fn divisibility_is_enforced() {
        assert!(ModelConfig::vgg_mini(30, 32, 1, 2).validate().is_err());
        assert!(ModelConfig::vgg_mini(20, 20, 1, 2).validate().is_ok());
        assert!(ModelConfig::vgg_mini(16, 16, 1, 1).validate().is_err());
    }

    #[test]
    fn train_config_bounds() {
        TrainConfig::default().validate().unwrap();
        let mut tc = TrainConfig::default();
        tc.adam_beta1 = 1.0;
        assert!(tc.validate().is_err());
        tc = TrainConfig { batch_size: 0, ..TrainConfig::default() };
        assert!(tc.validate().is_err());
        tc = TrainConfig { adam_epsilon: 0.0, ..TrainConfig::default() };
        assert!(tc.validate().is_err());
    }
}
