from sparsead.cli import run

run()
