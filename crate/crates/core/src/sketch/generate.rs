use crate::error::{Result, SketchError};
use crate::randgen::ElementQueueState;
use crate::scalar::Scalar;

use super::{GenerationParams, GumbelMaxSketch, Offer, Registers, WeightedVector};

/// Work counters reported alongside a generated sketch.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GenerationStats {
    /// Order statistics drawn across all queues.
    pub emitted: u64,
    pub search_rounds: usize,
    pub prune_rounds: usize,
    /// Linear rescans of the maximum register.
    pub rescans: usize,
}

/// `ceil(r * v_element / weight_sum)`, uncapped.
pub fn compute_ri<T: Scalar>(r: u64, v: &WeightedVector<T>, element: u64) -> Result<usize> {
    let weight = v.get(element).ok_or(SketchError::MissingElement(element))?;
    Ok(release_target(r, weight, v.weight_sum()))
}

#[inline]
fn release_target<T: Scalar>(r: u64, weight: T, weight_sum: T) -> usize {
    let share = T::from_u64(r).expect("budget representable") * weight / weight_sum;
    share.ceil().to_usize().unwrap_or(usize::MAX)
}

fn check_inputs<T: Scalar>(v: &WeightedVector<T>, params: &GenerationParams) -> Result<()> {
    params.validate()?;
    if v.is_empty() {
        return Err(SketchError::EmptyVector);
    }
    Ok(())
}

/// Baseline generator: drains every queue and keeps per-server minima.
///
/// `O(k * n+)` work. This is the reference every faster path must match.
pub fn sketch_naive<T: Scalar>(
    v: &WeightedVector<T>,
    params: &GenerationParams,
) -> Result<(GumbelMaxSketch<T>, GenerationStats)> {
    check_inputs(v, params)?;
    let k = params.k;
    let mut registers = Registers::new(k);
    for (element, weight) in v.iter() {
        let mut queue = ElementQueueState::new(element, weight, k);
        while !queue.is_exhausted() {
            let (time, server) = queue.next_order_statistic(&params.scheme)?;
            registers.offer(server, time, element);
        }
    }
    let stats = GenerationStats {
        emitted: (v.n_plus() * k) as u64,
        ..Default::default()
    };
    Ok((registers.into_sketch(params.scheme.fingerprint())?, stats))
}

/// FastGM: batched search until every server is reserved, then per-queue pruning.
///
/// Search releases `R_i = ceil(R * v_i / sum)` customers from each queue
/// while `R` grows by `delta` per round. Once all registers are set, each
/// queue keeps releasing until an arrival exceeds the current maximum
/// register, which can never again be improved upon by that queue. The
/// result is bit-identical to [`sketch_naive`].
pub fn sketch_fastgm<T: Scalar>(
    v: &WeightedVector<T>,
    params: &GenerationParams,
) -> Result<(GumbelMaxSketch<T>, GenerationStats)> {
    check_inputs(v, params)?;
    let k = params.k;
    let scheme = &params.scheme;
    let delta = params.delta as u64;
    let sum = v.weight_sum();
    let mut stats = GenerationStats::default();
    let mut registers = Registers::new(k);
    let mut queues: Vec<ElementQueueState<T>> = v
        .iter()
        .map(|(element, weight)| ElementQueueState::new(element, weight, k))
        .collect();

    let mut budget: u64 = 0;
    while registers.unset() > 0 {
        budget += delta;
        stats.search_rounds += 1;
        for queue in queues.iter_mut() {
            let target = release_target(budget, queue.weight(), sum).min(k);
            while queue.emitted() < target {
                let (time, server) = queue.next_order_statistic(scheme)?;
                stats.emitted += 1;
                registers.offer(server, time, queue.element());
            }
        }
    }

    let mut jstar = registers.argmax();
    let mut live: Vec<usize> = (0..queues.len())
        .filter(|&i| !queues[i].is_exhausted())
        .collect();
    while !live.is_empty() {
        budget += delta;
        stats.prune_rounds += 1;
        let mut kept = 0;
        for idx in 0..live.len() {
            let queue = &mut queues[live[idx]];
            // Arrivals only grow, so a queue already past the maximum is done.
            let mut alive = queue.last_time() <= registers.y(jstar);
            if alive {
                // At least one release per round keeps light queues moving.
                let target = release_target(budget, queue.weight(), sum)
                    .max(queue.emitted() + 1)
                    .min(k);
                while queue.emitted() < target {
                    let (time, server) = queue.next_order_statistic(scheme)?;
                    stats.emitted += 1;
                    if time > registers.y(jstar) {
                        alive = false;
                        break;
                    }
                    if registers.offer(server, time, queue.element()) == Offer::Improved
                        && server == jstar
                    {
                        jstar = registers.argmax();
                        stats.rescans += 1;
                    }
                }
                alive &= !queue.is_exhausted();
            }
            if alive {
                live[kept] = live[idx];
                kept += 1;
            }
        }
        live.truncate(kept);
    }

    Ok((registers.into_sketch(scheme.fingerprint())?, stats))
}
