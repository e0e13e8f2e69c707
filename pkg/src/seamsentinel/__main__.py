from seamsentinel.pipeline.cli import main

main()
