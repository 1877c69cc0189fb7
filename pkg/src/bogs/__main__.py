from bogs.cli import main

main()
