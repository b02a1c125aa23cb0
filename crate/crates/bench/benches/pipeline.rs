use criterion::{criterion_group, criterion_main, Criterion};
use rehearsal_core::scenario::REFUND_PREMISE_ID;
use rehearsal_core::{
    BundleOption, ConversationContext, Message, Pipeline, PipelineMode, ScenarioStore,
    SessionState,
};
use std::hint::black_box;

fn mock_pipeline(c: &mut Criterion) {
    let pipeline = Pipeline::mock();
    let premise = ScenarioStore::in_memory().get(REFUND_PREMISE_ID).unwrap();
    let ctx = ConversationContext::new(premise.clone())
        .with_message(Message::user(0, "I understand this matters to you."));

    c.bench_function("respond/full", |b| {
        b.iter(|| pipeline.respond(black_box(&ctx), PipelineMode::Full))
    });
    let user = Message::user(0, "How about we split the difference?");
    let empty = ConversationContext::new(premise.clone());
    c.bench_function("counterfactuals", |b| {
        b.iter(|| pipeline.counterfactuals(black_box(&empty), black_box(&user)))
    });
    c.bench_function("session/five_turns", |b| {
        b.iter(|| {
            let mut s = SessionState::start(&pipeline, premise.clone()).unwrap();
            for text in [
                "That's not fair.",
                "I understand this matters to you.",
                "How about I process the refund today?",
                "Help me understand what worries you.",
                "I hear your concern.",
            ] {
                if let Some(hidden) = s.hidden_strategy() {
                    s.attempt_recall(hidden.canonical_name()).unwrap();
                } else {
                    break;
                }
                s.submit_user_message(&pipeline, text).unwrap();
                s.select_option(BundleOption::Original).unwrap();
            }
            s
        })
    });
}

criterion_group!(benches, mock_pipeline);
criterion_main!(benches);
