//! Executor invariants over random plans on the shipped scenarios.

mod support;

use proptest::prelude::*;
use support::executor::{agent, check_drop_causality, check_gate, check_post_position, check_strict_prefix, scenario_plans, Scripted};
use taskbot_core::exec::kb_process_tick;
use taskbot_core::planner::{PlannerKind, PlannerRequest, PlannerResponse, TemplatePlanner};
use taskbot_core::world::{builtin_scenario, load_scenario};
use taskbot_core::{AgentConfig, KbMode, KnowledgeBase, Plan, Planner};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gate(input in scenario_plans(), growing in any::<bool>()) {
        let mode = if growing { KbMode::Growing } else { KbMode::Fixed };
        check_gate(input.0, &input.1, mode)?;
    }

    #[test]
    fn drop_causality(input in scenario_plans()) {
        check_drop_causality(input.0, &input.1)?;
    }

    #[test]
    fn strict_is_prefix_of_lenient(input in scenario_plans()) {
        check_strict_prefix(input.0, &input.1[0])?;
    }

    #[test]
    fn post_task_position(input in scenario_plans()) {
        check_post_position(input.0, &input.1)?;
    }
}

#[test]
fn planner_kind_does_not_change_execution() {
    let prompts = ["Go to the meeting room", "I'm feeling lonely, bring the teddy bear to the office"];
    let cfg = AgentConfig::default();
    let mut template = agent("office", cfg.clone(), Box::new(TemplatePlanner::new(cfg.profile.clone(), cfg.deployment)));
    let template_results: Vec<_> = prompts.iter().map(|p| template.run_task(p)).collect();
    let scripted_plans: Vec<Plan> = template_results.iter().map(|r| r.plan.clone().unwrap()).collect();
    let latencies = template_results.iter().map(|r| r.latency_sim_s).collect::<Vec<_>>();

    // one planner per latency so each task gets the template's decode time
    struct PerTask(Vec<Scripted>);
    impl Planner for PerTask {
        fn kind(&self) -> PlannerKind {
            PlannerKind::Remote
        }
        fn plan(&mut self, req: &PlannerRequest) -> PlannerResponse {
            self.0.remove(0).plan(req)
        }
    }
    let per_task = PerTask(
        scripted_plans
            .iter()
            .zip(&latencies)
            .map(|(p, l)| Scripted::new(std::slice::from_ref(p), PlannerKind::Remote, *l))
            .collect(),
    );
    let mut remote = agent("office", cfg, Box::new(per_task));
    let remote_results: Vec<_> = prompts.iter().map(|p| remote.run_task(p)).collect();
    assert_eq!(template_results, remote_results);
    assert_eq!(template.take_events(), remote.take_events());
    assert_eq!(template.world(), remote.world());
}

#[test]
fn kb_tick_never_shrinks_or_rewrites_initial_entries() {
    let world = load_scenario(builtin_scenario("home").unwrap()).unwrap();
    let mut kb = KnowledgeBase::new(world.initial_kb(), KbMode::Growing).unwrap();
    let initial = kb.to_document();
    let mut a = agent("home", AgentConfig::default(), Box::new(TemplatePlanner::new(Default::default(), taskbot_core::Deployment::Onboard)));
    for p in ["Go to the kitchen", "Go to the kids room", "Go to the living room"] {
        a.run_task(p);
        let before = kb.snapshot();
        kb_process_tick(a.world(), &mut kb, &a.world().detector);
        assert!(kb.snapshot().starts_with(&before));
    }
    assert!(a.kb().snapshot().starts_with(&initial.iter().map(|e| e.name.clone()).collect::<Vec<_>>()));
    assert_eq!(&a.kb().to_document()[..3], &initial[..]);
}
