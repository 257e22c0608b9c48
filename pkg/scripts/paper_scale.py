"""Run the full-size scenario preset (5 simulated days, 200 nodes).

Each cell takes a long time; use --jobs to spread cells over processes.
"""
import sys

from ccndtn.cli import main

if __name__ == "__main__":
    args = ["run", "--preset", "paper_scale", "--flags", "full,no_user_cache,dtn_only,dtn_user_cache",
            "--out", "out/paper_scale"]
    sys.exit(main(args + sys.argv[1:]))
