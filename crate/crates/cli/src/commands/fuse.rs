//! `fuse`: combine per-stream score tables into one fused table, by score
//! averaging (equal or grid-searched weights) or a trained feature head.

use std::path::Path;

use clap::Args;
use egoav_core::data::{Split, Task};
use egoav_core::fusion::{
    concat_penultimate, grid_search_weights, train_fc_fusion, weight_grid, weighted_sum_fuse,
    FcFusionConfig, FcFusionHead, FrozenStreams, FusionExample, FusionWeights, StreamId,
    STREAM_ORDER,
};
use egoav_core::metrics::argmax;
use egoav_core::tensor::{load_params, save_params, ParamSet};
use egoav_core::{Error, Result};

use super::common::{checkpoint_path, fused_scores_path, scores_path};
use crate::config::{ConfigFlags, FusionMethod};
use crate::table::{check_aligned, ScoreRow, ScoreTable};

/// Fuse the enabled streams' score tables for one task. Score averaging
/// reads val (for the weight search) and test tables; the fc head also
/// reads train tables and proves the stream checkpoints stayed frozen.
/// Writes `{out}/fused_{task}_test.csv`.
#[derive(Args, Debug)]
pub struct FuseArgs {
    #[command(flatten)]
    pub config: ConfigFlags,
    /// Hidden width of the fc fusion head.
    #[arg(long, default_value_t = 512)]
    pub hidden: usize,
}

/// One split's stream tables, unpacked row-wise for the fusion functions.
struct SplitScores {
    tables: Vec<ScoreTable>,
}

impl SplitScores {
    fn read(out_dir: &Path, streams: &[StreamId], task: Task, split: Split) -> Result<Self> {
        let tables: Vec<ScoreTable> = streams
            .iter()
            .map(|&stream| {
                let path = scores_path(out_dir, stream, task, split);
                if !path.exists() {
                    return Err(Error::invalid(format!(
                        "{}: no score table (run the scores command for --split {})",
                        path.display(),
                        split.as_str()
                    )));
                }
                let table = ScoreTable::read_csv(&path)?;
                if table.stream() != Some(stream) {
                    return Err(Error::invalid(format!(
                        "{}: table stream column does not say {}",
                        path.display(),
                        stream.as_str()
                    )));
                }
                Ok(table)
            })
            .collect::<Result<_>>()?;
        let refs: Vec<&ScoreTable> = tables.iter().collect();
        check_aligned(&refs)?;
        let classes = tables[0].num_classes();
        if tables.iter().any(|t| t.num_classes() != classes) {
            return Err(Error::invalid("stream tables disagree on class count"));
        }
        Ok(SplitScores { tables })
    }

    fn len(&self) -> usize {
        self.tables[0].rows().len()
    }

    fn num_classes(&self) -> usize {
        self.tables[0].num_classes()
    }

    fn labels(&self) -> Vec<usize> {
        self.tables[0].labels()
    }

    fn segment_id(&self, row: usize) -> &str {
        &self.tables[0].rows()[row].segment_id
    }

    /// All streams' scores for one segment, in the table (fixed) order.
    fn row(&self, index: usize) -> Result<Vec<egoav_core::fusion::StreamScores>> {
        self.tables.iter().map(|t| t.stream_scores(index)).collect()
    }

    fn rows(&self) -> Result<Vec<Vec<egoav_core::fusion::StreamScores>>> {
        (0..self.len()).map(|i| self.row(i)).collect()
    }

    /// Rows as fusion-head training examples.
    fn examples(&self) -> Result<Vec<FusionExample>> {
        let labels = self.labels();
        (0..self.len())
            .map(|i| {
                Ok(FusionExample {
                    features: concat_penultimate(&self.row(i)?)?,
                    label: labels[i],
                })
            })
            .collect()
    }
}

pub fn run(args: &FuseArgs) -> Result<()> {
    let config = args.config.resolve()?;
    if config.fusion == FusionMethod::None {
        return Err(Error::invalid(
            "pick a fusion method: unweighted, weighted, or fc",
        ));
    }
    // Canonical stream order keeps tables, weights, and concatenated
    // features consistent no matter how --streams was spelled.
    let streams: Vec<StreamId> = STREAM_ORDER
        .iter()
        .copied()
        .filter(|s| config.streams.contains(s))
        .collect();
    let out_dir = config.out_dir.clone();
    let test = SplitScores::read(&out_dir, &streams, config.task, Split::Test)?;

    let (fused, note) = match config.fusion {
        FusionMethod::None => unreachable!("rejected above"),
        FusionMethod::Unweighted => {
            let weights = FusionWeights::uniform(streams.len())?;
            let table = fuse_by_weights(&test, &weights)?;
            (table, "equal weights".to_string())
        }
        FusionMethod::Weighted => {
            let val = SplitScores::read(&out_dir, &streams, config.task, Split::Val)?;
            let weights = grid_search_weights(&val.rows()?, &val.labels(), &weight_grid())?;
            let path = out_dir.join(format!("fusion_weights_{}.txt", config.task.as_str()));
            write_weights(&path, &streams, &weights)?;
            let table = fuse_by_weights(&test, &weights)?;
            let pairs: Vec<String> = streams
                .iter()
                .zip(weights.values())
                .map(|(s, w)| format!("{} {}", s.as_str(), w))
                .collect();
            (table, format!("weights {}", pairs.join(", ")))
        }
        FusionMethod::Fc => {
            let train = SplitScores::read(&out_dir, &streams, config.task, Split::Train)?;
            let val = SplitScores::read(&out_dir, &streams, config.task, Split::Val)?;
            let (table, best_val) = fuse_by_head(args, &config, &streams, &train, &val, &test)?;
            (table, format!("fc head, best val top-1 {best_val:.4}"))
        }
    };

    let path = fused_scores_path(&out_dir, config.task, Split::Test);
    fused.write_csv(&path)?;
    let preds = fused.predictions()?;
    let labels = fused.labels();
    let hits = preds
        .iter()
        .zip(&labels)
        .filter(|(p, l)| argmax(p.scores()) == **l)
        .count();
    println!(
        "fused {} streams ({note}): test top-1 {:.4} -> {}",
        streams.len(),
        hits as f64 / labels.len() as f64,
        path.display()
    );
    Ok(())
}

fn fuse_by_weights(test: &SplitScores, weights: &FusionWeights) -> Result<ScoreTable> {
    let mut table = ScoreTable::new(None, test.num_classes(), 0)?;
    for (i, label) in test.labels().into_iter().enumerate() {
        let probs = weighted_sum_fuse(&test.row(i)?, weights)?;
        table.push(ScoreRow {
            segment_id: test.segment_id(i).to_string(),
            label,
            probs,
            feats: vec![],
        })?;
    }
    Ok(table)
}

fn fuse_by_head(
    args: &FuseArgs,
    config: &crate::config::RunConfig,
    streams: &[StreamId],
    train: &SplitScores,
    val: &SplitScores,
    test: &SplitScores,
) -> Result<(ScoreTable, f64)> {
    // The head trains on features from frozen streams: capture the stream
    // checkpoints' checksums and let the trainer verify them untouched.
    let stream_params: Vec<(StreamId, ParamSet<f32>)> = streams
        .iter()
        .map(|&stream| {
            let path = checkpoint_path(&config.out_dir, stream, config.task);
            if !path.exists() {
                return Err(Error::invalid(format!(
                    "{}: fc fusion needs the stream checkpoints present",
                    path.display()
                )));
            }
            Ok((stream, load_params(&path)?))
        })
        .collect::<Result<_>>()?;
    let stream_refs: Vec<(&str, &ParamSet<f32>)> = stream_params
        .iter()
        .map(|(stream, params)| (stream.as_str(), params))
        .collect();
    let frozen = FrozenStreams::capture(&stream_refs);

    let mut examples = train.examples()?;
    let train_items: Vec<usize> = (0..examples.len()).collect();
    examples.extend(val.examples()?);
    let val_items: Vec<usize> = (train_items.len()..examples.len()).collect();

    let head_config = FcFusionConfig {
        input_dim: examples[0].features.len(),
        hidden_dim: args.hidden,
        num_classes: train.num_classes(),
    };
    let mut head = FcFusionHead::new(head_config, config.seed)?;
    let outcome = train_fc_fusion(
        &mut head,
        &frozen,
        &stream_refs,
        &examples,
        &train_items,
        &val_items,
        &config.train_config(),
    )?;
    save_params(
        head.params(),
        &config
            .out_dir
            .join(format!("fusion_head_{}.ckpt", config.task.as_str())),
    )?;

    let mut table = ScoreTable::new(None, test.num_classes(), 0)?;
    for (i, label) in test.labels().into_iter().enumerate() {
        let features = concat_penultimate(&test.row(i)?)?;
        table.push(ScoreRow {
            segment_id: test.segment_id(i).to_string(),
            label,
            probs: head.predict(&features)?,
            feats: vec![],
        })?;
    }
    Ok((table, outcome.best_val_top1))
}

fn write_weights(path: &Path, streams: &[StreamId], weights: &FusionWeights) -> Result<()> {
    let mut out = String::new();
    for (stream, weight) in streams.iter().zip(weights.values()) {
        out.push_str(&format!("{} {}\n", stream.as_str(), weight));
    }
    std::fs::write(path, out)?;
    Ok(())
}
