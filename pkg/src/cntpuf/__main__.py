from cntpuf.cli import main

main()
