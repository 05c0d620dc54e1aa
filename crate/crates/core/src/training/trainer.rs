use std::collections::HashSet;
use std::fmt::Write as _;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::config::{Interaction, ModelKind, SelfTrainConfig, TrainingConfig};
use super::objective::{build_objective, calibration_loss, transformation_loss, Objective};
use super::optimizer::Optimizer;
use super::self_train::{self_train_augment, AugmentedPair};
use crate::embedding::{
    attr_correlation_loss, energy_loss, gcn_backward, gcn_forward_cached, path_loss, transe_energy_grad,
    triple_loss, EmbeddingSpace, GcnLayer, Gradients, LiteralEncoder, LossConfig, NegativeSampler,
    NormalizedAdjacency, RowTriple, Sampling, Side, Table,
};
use crate::error::{Error, Result};
use crate::evaluation::rank_metrics;
use crate::inference::{ranking_table, SimilarityConfig};
use crate::kg::{AlignmentSet, DatasetBundle, Fold};
use crate::rng::{self, KgRng};

/// One line of the training log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogRow {
    pub epoch: usize,
    pub loss: f64,
    pub val_hits1: Option<f64>,
    pub augmented: usize,
    pub augment_precision: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    pub rows: Vec<LogRow>,
}

impl TrainingLog {
    pub const CSV_HEADER: &'static str = "epoch,loss,val_hits1,augmented_seed,augment_precision";

    pub fn to_csv(&self) -> String {
        let mut out = format!("{}\n", Self::CSV_HEADER);
        let opt = |v: Option<f64>| v.map_or_else(String::new, |x| format!("{x:.6}"));
        for r in &self.rows {
            writeln!(
                out,
                "{},{:.6},{},{},{}",
                r.epoch,
                r.loss,
                opt(r.val_hits1),
                r.augmented,
                opt(r.augment_precision)
            )
            .unwrap();
        }
        out
    }

    /// Validation checks in order as `(epoch, hits1)`.
    pub fn checks(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.rows.iter().filter_map(|r| r.val_hits1.map(|h| (r.epoch, h)))
    }
}

#[derive(Clone, Debug)]
pub struct TrainOutput {
    /// The best checkpoint by validation Hits@1 (the final state when no
    /// validation pairs exist).
    pub space: EmbeddingSpace,
    pub log: TrainingLog,
    pub best_epoch: usize,
    pub best_val_hits1: Option<f64>,
    /// Epoch at which training stopped.
    pub stopped_at: usize,
    pub augmented: Vec<AugmentedPair>,
    pub negative_fallbacks: usize,
    pub empty_literals: usize,
}

struct Trainer<'a> {
    cfg: &'a TrainingConfig,
    obj: Objective,
    opt: Optimizer,
    samplers: [NegativeSampler; 2],
    literal: LiteralEncoder,
    gcn: Option<(NormalizedAdjacency, Vec<GcnLayer>)>,
    augmented: Vec<AugmentedPair>,
    rng: KgRng,
}

fn rows_of(space: &EmbeddingSpace, aug: &[AugmentedPair]) -> Vec<(usize, usize)> {
    aug.iter()
        .filter_map(|p| Some((space.entity_row(Side::Kg1, &p.source)?, space.entity_row(Side::Kg2, &p.target)?)))
        .collect()
}

impl Trainer<'_> {
    /// The space used for inference: graph-convolution outputs for the GCN
    /// model, the trained tables otherwise.
    fn materialize(&self) -> Result<EmbeddingSpace> {
        let Some((adj, layers)) = &self.gcn else {
            return Ok(self.obj.space.clone());
        };
        let h0 = table_matrix(&self.obj.space.entities);
        let (h, _) = gcn_forward_cached(adj, &h0, layers)?;
        let mut space = self.obj.space.clone();
        space.entities = Table::from_vec(h.ncols(), h.iter().copied().collect())?;
        space.dim = h.ncols();
        space.normalized = false;
        Ok(space)
    }

    fn parameters_finite(&self) -> bool {
        let space = &self.obj.space;
        let finite = |t: &Table| t.as_slice().iter().all(|x| x.is_finite());
        finite(&space.entities)
            && finite(&space.relations)
            && space.transform.as_ref().is_none_or(|m| m.iter().all(|x| x.is_finite()))
            && self.gcn.as_ref().is_none_or(|(_, ls)| ls.iter().all(|l| l.weight.iter().all(|x| x.is_finite())))
    }

    fn epoch(&mut self) -> Result<f64> {
        let mut total = 0.0;
        if self.gcn.is_some() {
            total += self.gcn_step()?;
        } else {
            total += self.triple_batches()?;
            total += self.alignment_step();
            total += self.path_step()?;
        }
        total += self.attribute_step()?;
        total += self.literal_step()?;
        Ok(total)
    }

    fn triple_batches(&mut self) -> Result<f64> {
        let cfg = self.cfg;
        let mut order: Vec<usize> = (0..self.obj.triples.len()).collect();
        order.shuffle(&mut self.rng);
        let k = cfg.loss.negatives_per_positive;
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_size_rel) {
            let mut pos = Vec::with_capacity(batch.len());
            let mut neg = Vec::with_capacity(batch.len() * k);
            for &i in batch {
                let (side, t) = self.obj.triples[i];
                pos.push(t);
                neg.extend(self.samplers[side.index()].sample(t, k, &mut self.rng));
            }
            let (loss, grads) = triple_loss(&pos, &neg, &cfg.loss, &self.obj.space, cfg.norm)?;
            self.opt.apply(&mut self.obj.space, &grads);
            total += loss;
        }
        Ok(total)
    }

    fn alignment_step(&mut self) -> f64 {
        let cfg = self.cfg;
        let w = cfg.alignment_weight;
        let mut pairs = match cfg.interaction {
            Interaction::Transformation | Interaction::Calibration => self.obj.seeds.clone(),
            Interaction::Sharing | Interaction::Swapping => Vec::new(),
        };
        pairs.extend(rows_of(&self.obj.space, &self.augmented));
        if pairs.is_empty() || w == 0.0 {
            return 0.0;
        }
        let mut grads = Gradients::default();
        let loss = if cfg.interaction == Interaction::Transformation {
            let (loss, gm, rows) = transformation_loss(&self.obj.space, &pairs);
            grads.add_transform(w, &gm);
            for (r, g) in rows {
                grads.entity.add(r, w, &g);
            }
            loss
        } else {
            let (loss, rows) = calibration_loss(&self.obj.space, &pairs);
            for (r, g) in rows {
                grads.entity.add(r, w, &g);
            }
            loss
        };
        self.opt.apply(&mut self.obj.space, &grads);
        w * loss
    }

    fn path_step(&mut self) -> Result<f64> {
        let w = self.cfg.path_weight;
        if self.obj.paths.is_empty() || w == 0.0 {
            return Ok(0.0);
        }
        let mut grads = Gradients::default();
        let mut total = 0.0;
        let rel = &self.obj.space.relations;
        for &(a, b, c) in &self.obj.paths {
            let g = path_loss(rel.row(a), rel.row(b), rel.row(c), self.cfg.path_op)?;
            total += g.value;
            grads.relation.add(a, w, &g.r1);
            grads.relation.add(b, w, &g.r2);
            grads.relation.add(c, w, &g.r3);
        }
        self.opt.apply(&mut self.obj.space, &grads);
        Ok(w * total)
    }

    fn attribute_step(&mut self) -> Result<f64> {
        let w = self.cfg.attribute_weight;
        let Some(table) = self.obj.space.attributes.as_ref() else { return Ok(0.0) };
        if self.obj.attr_pairs.is_empty() || w == 0.0 {
            return Ok(0.0);
        }
        let (loss, g) = attr_correlation_loss(&self.obj.attr_pairs, table, &mut self.rng)?;
        let mut grads = Gradients::default();
        for (r, v) in g.rows {
            grads.attribute.add(r, w, &v);
        }
        self.opt.apply(&mut self.obj.space, &grads);
        Ok(w * loss)
    }

    /// Attribute triples scored as `||e + a - v(literal)||` against
    /// corruptions that swap in a random entity of the same KG.
    fn literal_step(&mut self) -> Result<f64> {
        let w = self.cfg.literal_weight;
        if self.obj.attr_triples.is_empty() || w == 0.0 {
            return Ok(0.0);
        }
        let loss_cfg = LossConfig {
            negatives_per_positive: 1,
            ..self.cfg.loss.clone()
        };
        let space = &self.obj.space;
        let attrs = space.attributes.as_ref().expect("literal channel has an attribute table");
        let mut items = Vec::with_capacity(self.obj.attr_triples.len());
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        for a in &self.obj.attr_triples {
            let v = self.literal.encode(&a.value, space)?;
            let pool = &self.obj.pools[a.side.index()];
            let other = pool[self.rng.random_range(0..pool.len())];
            let ar = attrs.row(a.attribute);
            let (ep, gp) = transe_energy_grad(space.entities.row(a.entity), ar, &v, self.cfg.norm)?;
            let (en, gn) = transe_energy_grad(space.entities.row(other), ar, &v, self.cfg.norm)?;
            pos.push(ep);
            neg.push(en);
            items.push((a, other, gp, gn));
        }
        let loss = energy_loss(&loss_cfg, &pos, &neg)?;
        let mut grads = Gradients::default();
        for (k, (a, other, gp, gn)) in items.into_iter().enumerate() {
            for (c, e, g) in [(loss.d_pos[k], a.entity, gp), (loss.d_neg[k], other, gn)] {
                if c == 0.0 {
                    continue;
                }
                grads.entity.add(e, w * c, &g);
                grads.attribute.add(a.attribute, w * c, &g);
                self.literal.backprop(&a.value, space, -w * c, &g, &mut grads.chars);
            }
        }
        self.opt.apply(&mut self.obj.space, &grads);
        Ok(w * loss.value)
    }

    fn gcn_step(&mut self) -> Result<f64> {
        let cfg = self.cfg;
        let (adj, layers) = self.gcn.as_ref().expect("gcn state");
        let h0 = table_matrix(&self.obj.space.entities);
        let (h, cache) = gcn_forward_cached(adj, &h0, layers)?;
        let mut pairs = self.obj.seeds.clone();
        pairs.extend(rows_of(&self.obj.space, &self.augmented));
        let k = cfg.loss.negatives_per_positive;
        let mut negs = Vec::with_capacity(pairs.len() * k);
        for &(a, b) in &pairs {
            for _ in 0..k {
                if self.rng.random::<bool>() {
                    let p = &self.obj.pools[1];
                    negs.push((a, p[self.rng.random_range(0..p.len())]));
                } else {
                    let p = &self.obj.pools[0];
                    negs.push((p[self.rng.random_range(0..p.len())], b));
                }
            }
        }
        let energy = |(a, b): (usize, usize)| {
            let diff: Vec<f64> = h.row(a).iter().zip(h.row(b).iter()).map(|(x, y)| x - y).collect();
            cfg.norm.with_grad(&diff)
        };
        let pos_e: Vec<(f64, Vec<f64>)> = pairs.iter().map(|&p| energy(p)).collect();
        let neg_e: Vec<(f64, Vec<f64>)> = negs.iter().map(|&p| energy(p)).collect();
        let loss = energy_loss(
            &cfg.loss,
            &pos_e.iter().map(|e| e.0).collect::<Vec<_>>(),
            &neg_e.iter().map(|e| e.0).collect::<Vec<_>>(),
        )?;
        let mut d_out = Array2::zeros(h.raw_dim());
        let w = cfg.alignment_weight;
        for (set, coeffs, ps) in [(&pos_e, &loss.d_pos, &pairs), (&neg_e, &loss.d_neg, &negs)] {
            for ((_, g), (&c, &(a, b))) in set.iter().zip(coeffs.iter().zip(ps.iter())) {
                for (d, &x) in g.iter().enumerate() {
                    d_out[[a, d]] += w * c * x;
                    d_out[[b, d]] -= w * c * x;
                }
            }
        }
        let (d_weights, d_h0) = gcn_backward(adj, layers, &cache, &d_out);
        let (_, layers) = self.gcn.as_mut().expect("gcn state");
        for (i, (layer, dw)) in layers.iter_mut().zip(&d_weights).enumerate() {
            let slice = layer.weight.as_slice_mut().expect("standard layout");
            self.opt.apply_dense(i + 1, slice, dw.as_slice().expect("standard layout"));
        }
        self.opt
            .apply_dense(0, self.obj.space.entities.as_mut_slice(), d_h0.as_slice().expect("standard layout"));
        if self.obj.space.normalized {
            self.obj.space.entities.normalize_all();
        }
        Ok(w * loss.value)
    }
}

fn table_matrix(t: &Table) -> Array2<f64> {
    Array2::from_shape_vec((t.rows(), t.dim()), t.as_slice().to_vec()).expect("table shape")
}

/// Validation Hits@1 with cosine similarity over the validation pairs.
fn validation_hits1(space: &EmbeddingSpace, valid: &AlignmentSet) -> Result<f64> {
    let sources: Vec<String> = valid.sources().map(String::from).collect();
    let targets: Vec<String> = valid.targets().map(String::from).collect();
    let rt = ranking_table(space, &sources, &targets, &SimilarityConfig::default())?;
    Ok(rank_metrics(&rt, valid, &[1])?.hits[&1])
}

/// Trains on one fold. The fold's training links are the seed alignment;
/// validation Hits@1 is checked every `eval_every` epochs and training
/// stops after `patience` consecutive checks below the best so far.
pub fn train(
    bundle: &DatasetBundle,
    fold: &Fold,
    cfg: &TrainingConfig,
    self_train: Option<&SelfTrainConfig>,
) -> Result<TrainOutput> {
    if let Some(st) = self_train {
        st.validate()?;
    }
    let mut rng = rng::seeded(cfg.rng_seed);
    let obj = build_objective(&bundle.kg1, &bundle.kg2, &fold.train, cfg, &mut rng)?;
    let positives: Vec<RowTriple> = obj.triples.iter().map(|t| t.1).collect();
    let samplers = [
        NegativeSampler::new(obj.pools[0].clone(), &positives, cfg.loss.sampling)?,
        NegativeSampler::new(obj.pools[1].clone(), &positives, cfg.loss.sampling)?,
    ];
    let gcn = if cfg.model == ModelKind::Gcn {
        let adj = NormalizedAdjacency::from_neighbors(&obj.neighbors);
        let layers = (0..cfg.gcn.layers)
            .map(|_| GcnLayer::glorot(cfg.dim, cfg.dim, cfg.gcn.activation, &mut rng))
            .collect();
        Some((adj, layers))
    } else {
        None
    };
    let mut t = Trainer {
        cfg,
        obj,
        opt: Optimizer::new(cfg.optimizer, cfg.learning_rate),
        samplers,
        literal: LiteralEncoder::new(cfg.char_op),
        gcn,
        augmented: Vec::new(),
        rng,
    };

    // Self-training candidates: entities outside the seed alignment.
    let seed_src: HashSet<&str> = fold.train.sources().collect();
    let seed_tgt: HashSet<&str> = fold.train.targets().collect();
    let cand_src: Vec<String> = bundle.kg1.entities().iter().filter(|e| !seed_src.contains(e.as_str())).cloned().collect();
    let cand_tgt: Vec<String> = bundle.kg2.entities().iter().filter(|e| !seed_tgt.contains(e.as_str())).cloned().collect();
    let withheld: AlignmentSet = bundle
        .links
        .iter()
        .filter(|(a, _)| !seed_src.contains(a))
        .map(|(a, b)| (a.to_string(), b.to_string()))
        .collect();

    let mut log = TrainingLog::default();
    let mut best: Option<(f64, usize, EmbeddingSpace)> = None;
    let mut stopped_at = 0;
    let mut precision = None;
    let mut drops = 0;
    for epoch in 1..=cfg.max_epochs {
        stopped_at = epoch;
        if matches!(cfg.loss.sampling, Sampling::Truncated { .. }) && (epoch - 1) % cfg.refresh_every == 0 {
            for s in &mut t.samplers {
                s.refresh(&t.obj.space.entities);
            }
        }
        let loss = t.epoch()?;
        if !loss.is_finite() || !t.parameters_finite() {
            return Err(Error::Diverged { epoch });
        }
        if let Some(st) = self_train {
            if epoch >= st.start_epoch && (epoch - st.start_epoch) % st.propose_every == 0 {
                let snapshot = t.materialize()?;
                let (aug, plog) = self_train_augment(&snapshot, &cand_src, &cand_tgt, &t.augmented, Some(&withheld), st)?;
                t.augmented = aug;
                precision = plog.quality.map(|q| q.precision);
            }
        }
        let mut row = LogRow {
            epoch,
            loss,
            val_hits1: None,
            augmented: t.augmented.len(),
            augment_precision: precision,
        };
        let mut stop = false;
        if epoch % cfg.eval_every == 0 && !fold.valid.is_empty() {
            let snapshot = t.materialize()?;
            let h = validation_hits1(&snapshot, &fold.valid)?;
            row.val_hits1 = Some(h);
            match &best {
                Some((b, _, _)) if h < *b => {
                    drops += 1;
                    stop = drops >= cfg.patience;
                }
                _ => {
                    drops = 0;
                    best = Some((h, epoch, snapshot));
                }
            }
            log::debug!("epoch {epoch}: loss {loss:.4}, validation Hits@1 {h:.4}");
        }
        log.rows.push(row);
        if stop {
            log::info!("validation Hits@1 dropped at epoch {epoch}; stopping");
            break;
        }
    }

    let (space, best_epoch, best_val) = match best {
        Some((h, e, s)) => (s, e, Some(h)),
        None => (t.materialize()?, stopped_at, None),
    };
    Ok(TrainOutput {
        space,
        log,
        best_epoch,
        best_val_hits1: best_val,
        stopped_at,
        augmented: t.augmented,
        negative_fallbacks: t.samplers.iter().map(|s| s.fallbacks).sum(),
        empty_literals: t.literal.empty_literals,
    })
}
