"""The command DSL and the discrete action space of a target.

Actions reference faces of the target solid: an extrusion names a start
face (the sketch) and a parallel end face (the distance); a revolution
names one revolution-surface face from which axis, angle, and profile
are all recovered.  Crossing each geometric candidate with the four
boolean ops yields the index-mapped action table the policy works over.

Run:  python demos/03_commands_and_actions.py
"""

from cadgym.dsl import format_text, parse, print_ast
from cadgym.env import CadEnv, EnvConfig, TargetContext
from cadgym.fixtures import full_cylinder

ctx = TargetContext(full_cylinder(), target_id="demo-cylinder")
print(f"cylinder: {len(ctx.faces)} faces -> {len(ctx.table)} actions")
for i, action in enumerate(ctx.table.actions):
    kind = (f"extrude f{action.f_s}->f{action.f_e}"
            if action.a_t == "extrude" else f"revolve f{action.f_s}")
    print(f"  [{i:2d}] {kind:22s} {action.o_t}")

# the side face alone rebuilds the whole cylinder
side = [f for f in ctx.faces if f.surface_type == "cylinder"][0]
program = f"add_revolve(f{side.face_id}, newbody);"
print("\nprogram:", program)

env = CadEnv(ctx, EnvConfig(cd_cloud_size=256, emd_cloud_size=64))
rewards, infos = env.replay(parse(program))
print(f"replay -> status={env.status}, terminal IoU={env.success_iou():.4f}")

# the printer canonicalizes whatever spacing the author used
messy = "add_revolve( f2 ,union); # c\nadd_extrude(f1,f3,  subtraction);"
print("\ncanonical form of messy text:")
print(format_text(messy))
assert format_text(format_text(messy)) == format_text(messy)
