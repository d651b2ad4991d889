use serde::{Deserialize, Serialize};

use super::trace::RunTrace;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub total_time_ms: f64,
    pub tokens_emitted: usize,
    /// Tokens per second.
    pub throughput: f64,
    /// Mean over requests of `(finish − arrival) / output_length`, ms/token.
    pub normalized_latency_ms: f64,
    pub llm_busy_ms: f64,
    pub ssm_busy_ms: f64,
    pub llm_utilization: f64,
    /// LLM utilization from the first verification until fewer requests
    /// remain than it takes to fill both stages (`b_llm + b_ssm`).
    pub steady_llm_utilization: f64,
    pub mean_acceptance_rate: f64,
    /// Mean acceptance rate of the drafts each SSM won; `None` if it never won.
    pub per_ssm_acceptance: Vec<Option<f64>>,
    pub rounds: usize,
    pub final_s: usize,
    pub s_trajectory: Vec<usize>,
    pub weight_trajectory: Vec<Vec<f64>>,
    pub max_pool_depth: usize,
}

pub fn collect_metrics(trace: &RunTrace) -> RunMetrics {
    let total = trace.total_time_ms;
    let tokens_emitted: usize = trace.requests.iter().map(|r| r.output.len()).sum();
    let throughput = if total > 0.0 {
        tokens_emitted as f64 / (total / 1000.0)
    } else {
        0.0
    };

    let latencies: Vec<f64> = trace
        .requests
        .iter()
        .filter(|r| !r.output.is_empty())
        .filter_map(|r| r.finish_ms.map(|f| (f - r.arrival_ms) / r.output.len() as f64))
        .collect();
    let normalized_latency_ms = mean(&latencies).unwrap_or(0.0);

    let llm_busy_ms: f64 = trace.llm_intervals.iter().map(|(a, b)| b - a).sum();
    let llm_utilization = if total > 0.0 { llm_busy_ms / total } else { 0.0 };

    let rates: Vec<f64> = trace.verifications.iter().map(|v| v.acceptance_rate()).collect();
    let per_ssm_acceptance = (0..trace.n_ssms)
        .map(|i| {
            let r: Vec<f64> = trace
                .verifications
                .iter()
                .filter(|v| v.voted_ssm.0 == i)
                .map(|v| v.acceptance_rate())
                .collect();
            mean(&r)
        })
        .collect();

    RunMetrics {
        total_time_ms: total,
        tokens_emitted,
        throughput,
        normalized_latency_ms,
        llm_busy_ms,
        ssm_busy_ms: trace.ssm_busy_ms,
        llm_utilization,
        steady_llm_utilization: steady_utilization(trace),
        mean_acceptance_rate: mean(&rates).unwrap_or(0.0),
        per_ssm_acceptance,
        rounds: trace.rounds.len(),
        final_s: trace.rounds.last().map(|r| r.s_next).unwrap_or(0),
        s_trajectory: trace.rounds.iter().map(|r| r.s_next).collect(),
        weight_trajectory: trace.rounds.iter().map(|r| r.weights.clone()).collect(),
        max_pool_depth: trace.max_pool_depth,
    }
}

fn mean(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        None
    } else {
        Some(xs.iter().sum::<f64>() / xs.len() as f64)
    }
}

fn steady_utilization(trace: &RunTrace) -> f64 {
    let Some(&(start, _)) = trace.llm_intervals.first() else {
        return 0.0;
    };
    let mut finishes: Vec<f64> = trace.requests.iter().filter_map(|r| r.finish_ms).collect();
    finishes.sort_by(f64::total_cmp);
    let needed = trace.b_llm + trace.b_ssm;
    let n = trace.requests.len();
    let end = if n >= needed {
        // Unfinished count drops below `needed` at the (n − needed + 1)-th finish.
        finishes.get(n - needed).copied().unwrap_or(trace.total_time_ms)
    } else {
        trace.total_time_ms
    };
    if end <= start {
        return 0.0;
    }
    let busy: f64 = trace
        .llm_intervals
        .iter()
        .map(|&(a, b)| (b.min(end) - a.max(start)).max(0.0))
        .sum();
    busy / (end - start)
}
