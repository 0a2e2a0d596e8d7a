//! Steps through the construction MDP on the bull graph for each task,
//! showing the forced labels after every action and the energies along the way.

use gfnco::oracle::reachable_terminals;
use gfnco::{Graph, Task};

fn main() -> gfnco::Result<()> {
    // Triangle 0-1-2 with pendant vertices 3 (on 1) and 4 (on 2).
    let g = Graph::new("bull", 5, &[(0, 1), (1, 2), (2, 0), (1, 3), (2, 4)])?;
    for task in Task::ALL {
        println!("== {task}");
        let mut s = task.initial_state(&g);
        println!("  start {s}  E~={}", task.intermediate_energy(&g, &s));
        while !task.is_terminal(&s) {
            // Always take the highest legal vertex so the walk is reproducible.
            let mask = task.action_mask(&g, &s);
            let v = (0..mask.len()).rev().find(|&v| mask[v]).expect("legal action");
            let step = task.step(&g, &s, v)?;
            s = step.next_state;
            println!("  act {v}  -> {s}  forced {:?}  E~={}", step.newly_forced, task.intermediate_energy(&g, &s));
        }
        println!("  terminal energy {}", task.terminal_energy(&g, &s)?);
        let xs = reachable_terminals(&g, task)?;
        let shown: Vec<String> = xs.iter().map(|x| x.to_string()).collect();
        println!("  {} reachable terminals: {}", xs.len(), shown.join(" "));
    }
    Ok(())
}
